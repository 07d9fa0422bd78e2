#pragma once

#define ENTCERT_VERSION "0.1.0"

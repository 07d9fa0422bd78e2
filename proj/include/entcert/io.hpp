#pragma once

#include <chrono>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/utsname.h>

#include <json.hpp>

#include "entcert/epsnet.hpp"
#include "entcert/robustness.hpp"
#include "entcert/version.hpp"

namespace entcert::io {

using nlohmann::json;

// {local_dims, matrix_re, matrix_im}, row-major.
inline json state_to_json(const DensityMatrix& rho) {
  json j;
  j["local_dims"] = rho.structure().local_dims();
  const Mat& m = rho.mat();
  std::vector<std::vector<double>> re(m.rows()), im(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index k = 0; k < m.cols(); ++k) {
      re[i].push_back(m(i, k).real());
      im[i].push_back(m(i, k).imag());
    }
  j["matrix_re"] = re;
  j["matrix_im"] = im;
  return j;
}

inline DensityMatrix state_from_json(const json& j) {
  std::vector<int> dims = j.at("local_dims").get<std::vector<int>>();
  HilbertStructure hs(dims);
  const auto& re = j.at("matrix_re");
  const auto& im = j.at("matrix_im");
  const int d = hs.total_dim();
  if (static_cast<int>(re.size()) != d || static_cast<int>(im.size()) != d)
    throw structural_error("state json: matrix size does not match local_dims");
  Mat m(d, d);
  for (int i = 0; i < d; ++i) {
    if (static_cast<int>(re[i].size()) != d || static_cast<int>(im[i].size()) != d)
      throw structural_error("state json: ragged matrix rows");
    for (int k = 0; k < d; ++k)
      m(i, k) = Complex(re[i][k].get<double>(), im[i][k].get<double>());
  }
  return DensityMatrix(std::move(m), std::move(hs));
}

inline DensityMatrix load_state(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open state file: " + path);
  json j;
  in >> j;
  return state_from_json(j);
}

inline json witness_to_json(const Witness& w) {
  json j;
  const Mat& m = w.op;
  std::vector<std::vector<double>> re(m.rows()), im(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index k = 0; k < m.cols(); ++k) {
      re[i].push_back(m(i, k).real());
      im[i].push_back(m(i, k).imag());
    }
  j["matrix_re"] = re;
  j["matrix_im"] = im;
  j["beta"] = w.beta;
  j["eps_hat"] = w.eps_hat;
  j["eta"] = w.eta;
  j["value_on_target"] = w.value_on_target;
  j["net_params"] = {{"subdiv_n", w.net_subdiv}, {"sphere_eta", w.net_eta}};
  return j;
}

// Net cache: {dim_real, n, vertices, eta}; keyed by (dim_real, n).
inline json sphere_net_to_json(const SphereNet& net) {
  json j;
  j["dim_real"] = net.dim_real;
  j["n"] = net.subdiv_n;
  j["eta"] = net.eta;
  std::vector<std::vector<double>> verts;
  for (const auto& v : net.vertices)
    verts.emplace_back(v.data(), v.data() + v.size());
  j["vertices"] = verts;
  return j;
}

inline SphereNet sphere_net_from_json(const json& j) {
  SphereNet net;
  net.dim_real = j.at("dim_real").get<int>();
  net.subdiv_n = j.at("n").get<int>();
  net.eta = j.at("eta").get<double>();
  for (const auto& row : j.at("vertices")) {
    RealVec v(net.dim_real);
    if (static_cast<int>(row.size()) != net.dim_real)
      throw structural_error("net cache: vertex dimension mismatch");
    for (int i = 0; i < net.dim_real; ++i) v(i) = row[i].get<double>();
    net.vertices.push_back(std::move(v));
  }
  return net;
}

inline std::string net_cache_name(int dim_real, int n) {
  return "net_d" + std::to_string(dim_real) + "_n" + std::to_string(n) + ".json";
}

inline json cert_result_to_json(const CertResult& res) {
  json j;
  j["verdict"] = verdict_name(res.verdict);
  j["numbers"] = res.numbers;
  if (res.witness) j["witness"] = witness_to_json(*res.witness);
  return j;
}

inline json iter_record_to_json(const IterRecord& r) {
  json j;
  j["iter"] = r.iter;
  j["f"] = r.f;
  j["g"] = std::isnan(r.g) ? json() : json(r.g);
  j["r"] = std::isnan(r.r) ? json() : json(r.r);
  j["step_type"] = std::string(1, r.step_type);
  j["active_size"] = r.active_size;
  j["lmo_calls"] = r.lmo_calls;
  return j;
}

inline json probe_to_json(const ProbeResult& p) {
  json j;
  j["strength"] = p.strength;
  j["verdict"] = p.verdict == ProbeVerdict::Entangled
                     ? "entangled"
                     : (p.verdict == ProbeVerdict::Separable ? "separable" : "unknown");
  j["kind"] = cert_kind_name(p.kind);
  j["certified_value"] = p.certified_value;
  j["f"] = p.f;
  j["r"] = std::isnan(p.r) ? json() : json(p.r);
  j["delta"] = p.delta;
  j["iterations"] = p.iterations;
  j["lmo_calls"] = p.lmo_calls;
  return j;
}

inline json robustness_to_json(const RobustnessResult& r) {
  json j;
  j["channel"] = r.channel;
  if (!std::isnan(r.a_param)) j["a"] = r.a_param;
  j["success"] = r.success;
  j["p_ent"] = r.p_ent;
  j["p_sep"] = r.p_sep;
  j["gap"] = r.gap;
  j["fidelity_ent"] = std::isnan(r.fidelity_at_ent) ? json() : json(r.fidelity_at_ent);
  j["fidelity_sep"] = std::isnan(r.fidelity_at_sep) ? json() : json(r.fidelity_at_sep);
  j["ent_certificate"] = cert_kind_name(r.ent_kind);
  j["sep_certificate"] = cert_kind_name(r.sep_kind);
  j["probes"] = r.probes;
  j["wall_time"] = r.wall_time_s;
  if (!r.diagnostics.empty()) j["diagnostics"] = r.diagnostics;
  json traces = json::array();
  for (const auto& p : r.traces) traces.push_back(probe_to_json(p));
  j["traces"] = traces;
  return j;
}

inline std::string robustness_csv_header() {
  return "channel,a,p_ent,p_sep,gap,fidelity_ent,fidelity_sep,probes,wall_time";
}

inline std::string robustness_csv_row(const RobustnessResult& r) {
  std::ostringstream os;
  os.precision(12);
  os << r.channel << ',';
  if (!std::isnan(r.a_param)) os << r.a_param;
  os << ',' << r.p_ent << ',' << r.p_sep << ',' << r.gap << ',';
  if (!std::isnan(r.fidelity_at_ent)) os << r.fidelity_at_ent;
  os << ',';
  if (!std::isnan(r.fidelity_at_sep)) os << r.fidelity_at_sep;
  os << ',' << r.probes << ',' << r.wall_time_s;
  return os.str();
}

// Every output file embeds its manifest: command, config, seeds, version,
// wall time, host.
inline json make_manifest(const std::string& command, const json& config_snapshot,
                          uint64_t seed, double wall_time_s) {
  json j;
  j["command"] = command;
  j["config"] = config_snapshot;
  j["seed"] = seed;
  j["library_version"] = ENTCERT_VERSION;
  j["wall_time_s"] = wall_time_s;
  utsname u{};
  if (uname(&u) == 0) {
    j["host"] = {{"sysname", u.sysname}, {"release", u.release}, {"machine", u.machine}};
  }
  return j;
}

inline void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << j.dump(2) << '\n';
}

}  // namespace entcert::io

// Thin pybind11 layer. Structured values cross the boundary as JSON text and
// are decoded on the Python side.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "pseudopoisson/commands.hpp"
#include "pseudopoisson/errors.hpp"
#include "pseudopoisson/inference.hpp"
#include "pseudopoisson/mle.hpp"
#include "pseudopoisson/moments.hpp"
#include "pseudopoisson/serialize.hpp"
#include "pseudopoisson/simulation.hpp"

namespace py = pybind11;
using namespace pseudopoisson;

namespace {

using Pairs = std::vector<std::pair<Count, Count>>;

BivariateSample to_sample(const Pairs& pairs) {
  std::vector<CountPair> v;
  v.reserve(pairs.size());
  for (auto [a, b] : pairs) v.push_back({a, b});
  return BivariateSample(std::move(v));
}

std::string fit(const std::string& model, const Pairs& pairs, const std::string& method, int restarts) {
  const auto spec = parse_model_spec(model);
  const auto s = to_sample(pairs);
  if (method == "mme") return to_json(mme_fit(spec, s)).dump();
  if (method != "mle") throw UsageError("method must be 'mle' or 'mme'");
  MleOptions o;
  o.restarts = restarts;
  return to_json(mle_fit(spec, s, o)).dump();
}

std::string report(const Pairs& pairs, const std::vector<std::string>& models, bool tests) {
  FitRequest req;
  for (const auto& m : models) req.specs.push_back(parse_model_spec(m));
  if (req.specs.empty()) req.specs = all_model_specs();
  req.tests = tests;
  return to_json(build_fit_report(to_sample(pairs), req)).dump();
}

std::string lrt_json(const std::string& full, const std::string& sub, double level, const Pairs& pairs) {
  const auto f = fit_from_json(Json::parse(full));
  const auto s = fit_from_json(Json::parse(sub));
  if (pairs.empty()) return to_json(lrt(f, s, level)).dump();
  const auto sample = to_sample(pairs);
  return to_json(lrt(f, s, level, &sample)).dump();
}

Pairs simulate(const std::string& model, const std::string& params, std::size_t n, std::uint64_t seed) {
  const auto spec = parse_model_spec(model);
  const auto s = sample_from(spec, params_from_json(Json::parse(params)), n, seed);
  Pairs out;
  out.reserve(s.size());
  for (auto c : s.pairs()) out.emplace_back(c.x1, c.x2);
  return out;
}

py::tuple cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bivariate pseudo-Poisson models";
  // Later registrations are tried first, so the base class goes first.
  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ExistenceError>(m, "ExistenceError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<UsageError>(m, "UsageError", base.ptr());

  m.def("version", &version);
  m.def("population_moments", [](const std::string& params) {
    const auto p = params_from_json(Json::parse(params));
    if (!is_admissible(p)) throw DomainError("parameters are not admissible");
    return to_json(population_moments(p)).dump();
  });
  m.def("sample_moments", [](const Pairs& pairs) { return to_json(sample_moments(to_sample(pairs))).dump(); });
  m.def("fit", &fit, py::arg("model"), py::arg("pairs"), py::arg("method") = "mle", py::arg("restarts") = MleOptions{}.restarts);
  m.def("report", &report, py::arg("pairs"), py::arg("models"), py::arg("tests"));
  m.def("lrt", &lrt_json, py::arg("full"), py::arg("sub"), py::arg("level"), py::arg("pairs"));
  m.def("rho_bounds", [](const std::string& model) { return to_json(rho_bounds(parse_model_spec(model))).dump(); });
  m.def("simulate", &simulate, py::arg("model"), py::arg("params"), py::arg("n"), py::arg("seed"));
  m.def("run_cli", &cli);
}

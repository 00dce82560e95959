#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "sefe/analysis.hpp"
#include "sefe/checkpoint.hpp"
#include "sefe/cli.hpp"
#include "sefe/corpus.hpp"
#include "sefe/expfam.hpp"
#include "sefe/model.hpp"

namespace py = pybind11;
using namespace sefe;

namespace {

ModelShape make_shape(const std::string& mode, std::size_t dim, std::size_t vocab, std::size_t groups,
                      std::size_t hidden) {
  ModelShape s;
  s.mode = parse_mode(mode);
  s.dim = dim;
  s.vocab = vocab;
  s.groups = groups;
  s.hidden = hidden;
  s.validate();
  return s;
}

std::vector<double> amortize_py(const std::string& kind, const std::vector<double>& rho0,
                                const std::vector<double>& w1, const std::vector<double>& w2,
                                std::size_t hidden) {
  NetKind k;
  if (kind == "ff") {
    k = NetKind::FeedForward;
  } else if (kind == "resnet") {
    k = NetKind::Residual;
  } else {
    throw std::invalid_argument("kind must be 'ff' or 'resnet'");
  }
  if (w1.size() != hidden * rho0.size() || w2.size() != hidden * rho0.size()) {
    throw std::invalid_argument("W1 and W2 need hidden * len(rho0) entries");
  }
  return amortize(k, rho0, AmortizationNetRef{w1, w2, hidden, rho0.size()});
}

}  // namespace

PYBIND11_MODULE(_sefe, m) {
  m.doc() = "Structured exponential family embeddings";

  m.def("parameter_count",
        [](const std::string& mode, std::size_t dim, std::size_t vocab, std::size_t groups,
           std::size_t hidden) { return parameter_count(make_shape(mode, dim, vocab, groups, hidden)); },
        py::arg("mode"), py::arg("dim"), py::arg("vocab"), py::arg("groups"), py::arg("hidden") = 0);

  m.def("log_prob",
        [](const std::string& family, double x, double eta) { return log_prob(parse_family(family), x, eta); },
        py::arg("family"), py::arg("x"), py::arg("eta"));
  m.def("dlogp_deta",
        [](const std::string& family, double x, double eta) { return dlogp_deta(parse_family(family), x, eta); },
        py::arg("family"), py::arg("x"), py::arg("eta"));
  m.def("drop_probability", &drop_probability, py::arg("frequency"), py::arg("threshold"));
  m.def("amortize", &amortize_py, py::arg("kind"), py::arg("rho0"), py::arg("w1"), py::arg("w2"),
        py::arg("hidden"), "W1 is hidden x K and W2 is K x hidden, both row-major.");
  m.def("spectrum",
        [](const std::vector<std::vector<double>>& vectors, const std::vector<std::string>& ids) {
          return spectrum(vectors, ids).projections;
        },
        py::arg("vectors"), py::arg("ids"));

  m.def("run_cli",
        [](const std::vector<std::string>& args) {
          std::ostringstream out, err;
          const int status = run_cli(args, out, err);
          return py::make_tuple(status, out.str(), err.str());
        },
        py::arg("args"), "Runs one CLI invocation; returns (status, stdout, stderr).");

  py::class_<Checkpoint>(m, "Checkpoint")
      .def_static("load", &load_checkpoint, py::arg("path"))
      .def("save", [](const Checkpoint& c, const std::filesystem::path& p) { save_checkpoint(c, p); },
           py::arg("path"))
      .def_property_readonly("mode", [](const Checkpoint& c) { return std::string(to_string(c.shape.mode)); })
      .def_property_readonly("family", [](const Checkpoint& c) { return std::string(to_string(c.family)); })
      .def_property_readonly("dim", [](const Checkpoint& c) { return c.shape.dim; })
      .def_property_readonly("hidden", [](const Checkpoint& c) { return c.shape.hidden; })
      .def_property_readonly("seed", [](const Checkpoint& c) { return c.seed; })
      .def_readonly("tokens", &Checkpoint::tokens)
      .def_readonly("counts", &Checkpoint::counts)
      .def_readonly("group_ids", &Checkpoint::group_ids)
      .def_readonly("metadata", &Checkpoint::metadata)
      .def("parameter_count", [](const Checkpoint& c) { return parameter_count(c.shape); })
      .def("embedding",
           [](const Checkpoint& c, const std::string& word, const std::string& group) {
             return resolve_embedding(c.params, c.token_index(word), c.group_index(group));
           },
           py::arg("word"), py::arg("group"))
      .def("context",
           [](const Checkpoint& c, const std::string& word, const std::string& group) {
             const auto v = c.params.context(c.token_index(word), c.group_index(group));
             return std::vector<double>(v.begin(), v.end());
           },
           py::arg("word"), py::arg("group"))
      .def("neighbors",
           [](const Checkpoint& c, const std::string& word, const std::string& group, std::size_t k) {
             std::vector<std::pair<std::string, double>> out;
             for (const auto& n : cosine_neighbors(c, word, group, k)) out.emplace_back(n.token, n.similarity);
             return out;
           },
           py::arg("word"), py::arg("group"), py::arg("k") = 8)
      .def("spectrum", [](const Checkpoint& c, const std::string& word) { return group_spectrum(c, word).projections; },
           py::arg("word"))
      .def("deviations",
           [](const Checkpoint& c, const std::string& group, std::size_t pool, std::size_t k) {
             std::vector<std::pair<std::string, double>> out;
             for (const auto& d : deviation_ranking(c, group, pool, k)) out.emplace_back(d.token, d.distance);
             return out;
           },
           py::arg("group"), py::arg("pool") = 1000, py::arg("k") = 3)
      .def("__eq__", [](const Checkpoint& a, const Checkpoint& b) { return a == b; })
      .def("__repr__", [](const Checkpoint& c) {
        return "<Checkpoint mode=" + std::string(to_string(c.shape.mode)) + " K=" + std::to_string(c.shape.dim) +
               " L=" + std::to_string(c.shape.vocab) + " S=" + std::to_string(c.shape.groups) + ">";
      });
}

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pmra/bench.hpp"
#include "pmra/estimators.hpp"
#include "pmra/model.hpp"
#include "pmra/moments.hpp"
#include "pmra/recovery.hpp"
#include "pmra/signal.hpp"

#define STRINGIFY(x) #x
#define MACRO_STRINGIFY(x) STRINGIFY(x)

namespace py = pybind11;
using namespace pybind11::literals;

namespace {

py::array_t<double> tensor_to_numpy(const pmra::Tensor3& t) {
  const auto q = static_cast<py::ssize_t>(t.dim());
  py::array_t<double> out({q, q, q});
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

pmra::Tensor3 tensor_from_numpy(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 3 || a.shape(0) != a.shape(1) || a.shape(1) != a.shape(2)) {
    throw std::invalid_argument("expected a cubic (q, q, q) array");
  }
  pmra::Tensor3 t(static_cast<int>(a.shape(0)));
  std::copy(a.data(), a.data() + a.size(), t.data().begin());
  return t;
}

pmra::Signal as_signal(const pmra::Vector& v) { return pmra::Signal(v); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Projected multi-reference alignment core routines";

  py::register_exception<pmra::RecoveryError>(m, "RecoveryError", PyExc_RuntimeError);

  // --- signal ---------------------------------------------------------------
  py::class_<pmra::DihedralElement>(m, "DihedralElement")
      .def(py::init<>())
      .def(py::init([](int shift, bool reflected) { return pmra::DihedralElement{shift, reflected}; }),
           "shift"_a, "reflected"_a = false)
      .def_readwrite("shift", &pmra::DihedralElement::shift)
      .def_readwrite("reflected", &pmra::DihedralElement::reflected)
      .def("apply", [](const pmra::DihedralElement& g, const pmra::Vector& s) {
        return pmra::apply(g, as_signal(s)).values();
      });

  m.def("dft", [](const pmra::Vector& x) { return pmra::dft(x); }, "x"_a, "Unitary DFT");
  m.def("idft", [](const pmra::ComplexVector& x) { return pmra::idft(x); }, "xhat"_a);
  m.def(
      "orbit",
      [](const pmra::Vector& s) {
        std::vector<pmra::Vector> out;
        for (const auto& member : pmra::orbit(as_signal(s))) out.push_back(member.values());
        return out;
      },
      "signal"_a, "All 2p dihedral transforms R_l J^b θ");
  m.def(
      "orbit_distance",
      [](const pmra::Vector& a, const pmra::Vector& b) { return pmra::orbit_distance(as_signal(a), as_signal(b)); },
      "a"_a, "b"_a);

  // --- model ------------------------------------------------------------------
  py::class_<pmra::ObservationBatch>(m, "ObservationBatch")
      .def_readonly("q", &pmra::ObservationBatch::q)
      .def_readonly("sigma", &pmra::ObservationBatch::sigma)
      .def_readonly("seed", &pmra::ObservationBatch::seed)
      .def_readonly("samples", &pmra::ObservationBatch::samples)
      .def_property_readonly("n", &pmra::ObservationBatch::n);

  m.def("project", [](const pmra::Vector& v) { return pmra::project(v); }, "v"_a);
  m.def(
      "projected_orbit_sample",
      [](const pmra::Vector& s, int shift) { return pmra::projected_orbit_sample(as_signal(s), shift); },
      "signal"_a, "shift"_a);
  m.def(
      "generate",
      [](const pmra::Vector& s, int n, double sigma, std::uint64_t seed) {
        return pmra::generate(as_signal(s), n, sigma, seed);
      },
      "signal"_a, "n"_a, "sigma"_a, "seed"_a);

  // --- moments ----------------------------------------------------------------
  py::enum_<pmra::MomentKind>(m, "MomentKind")
      .value("population", pmra::MomentKind::population)
      .value("raw_empirical", pmra::MomentKind::raw_empirical)
      .value("debiased_empirical", pmra::MomentKind::debiased_empirical);

  py::class_<pmra::MomentSet>(m, "MomentSet")
      .def(py::init([](const pmra::Vector& t1, const pmra::Matrix& t2,
                       const py::array_t<double, py::array::c_style | py::array::forcecast>& t3,
                       pmra::MomentKind kind) {
             pmra::MomentSet ms;
             ms.q = static_cast<int>(t1.size());
             ms.t1 = t1;
             ms.t2 = t2;
             ms.t3 = tensor_from_numpy(t3);
             ms.kind = kind;
             if (ms.t2.rows() != ms.q || ms.t2.cols() != ms.q || ms.t3.dim() != ms.q) {
               throw std::invalid_argument("inconsistent moment dimensions");
             }
             return ms;
           }),
           "t1"_a, "t2"_a, "t3"_a, "kind"_a)
      .def_readonly("q", &pmra::MomentSet::q)
      .def_readonly("t1", &pmra::MomentSet::t1)
      .def_readonly("t2", &pmra::MomentSet::t2)
      .def_property_readonly("t3", [](const pmra::MomentSet& s) { return tensor_to_numpy(s.t3); })
      .def_readonly("kind", &pmra::MomentSet::kind);

  py::class_<pmra::CosineMomentSet>(m, "CosineMomentSet")
      .def_readonly("q", &pmra::CosineMomentSet::q)
      .def_readonly("t1_projected", &pmra::CosineMomentSet::t1_projected)
      .def_readonly("m2", &pmra::CosineMomentSet::m2)
      .def_property_readonly("m3", [](const pmra::CosineMomentSet& s) { return tensor_to_numpy(s.m3); });

  py::class_<pmra::CosineMatrix>(m, "CosineMatrix")
      .def(py::init<int>(), "p"_a)
      .def_property_readonly("p", &pmra::CosineMatrix::p)
      .def_property_readonly("a", &pmra::CosineMatrix::a)
      .def_property_readonly("a_inv", &pmra::CosineMatrix::a_inv);

  m.def("population_moments", [](const pmra::Vector& s) { return pmra::population_moments(as_signal(s)); },
        "signal"_a);
  m.def("empirical_moments", py::overload_cast<const pmra::ObservationBatch&>(&pmra::empirical_moments),
        "batch"_a);
  m.def("empirical_moments", py::overload_cast<const pmra::RowMatrix&>(&pmra::empirical_moments),
        "samples"_a);
  m.def("debias", &pmra::debias, "raw"_a, "sigma"_a);
  m.def("to_cosine", &pmra::to_cosine, "moments"_a, "cosine_matrix"_a);
  m.def(
      "population_cosine_moments",
      [](const pmra::Vector& s) { return pmra::population_cosine_moments(as_signal(s)); }, "signal"_a);

  // --- recovery ---------------------------------------------------------------
  py::class_<pmra::RecoveryTrace>(m, "RecoveryTrace")
      .def_readonly("q", &pmra::RecoveryTrace::q)
      .def_readonly("mean", &pmra::RecoveryTrace::mean)
      .def_readonly("magnitudes", &pmra::RecoveryTrace::magnitudes)
      .def_readonly("c", &pmra::RecoveryTrace::c)
      .def_readonly("beta", &pmra::RecoveryTrace::beta)
      .def_readonly("d", &pmra::RecoveryTrace::d)
      .def_readonly("d_star", &pmra::RecoveryTrace::d_star)
      .def_readonly("eps", &pmra::RecoveryTrace::eps)
      .def_readonly("anchor_candidates", &pmra::RecoveryTrace::anchor_candidates)
      .def_readonly("degenerate_flags", &pmra::RecoveryTrace::degenerate_flags)
      .def_readonly("quadruple_decisions", &pmra::RecoveryTrace::quadruple_decisions)
      .def_readonly("binary_decisions", &pmra::RecoveryTrace::binary_decisions)
      .def_readonly("selected_anchor", &pmra::RecoveryTrace::selected_anchor)
      .def_readonly("candidate_residuals", &pmra::RecoveryTrace::candidate_residuals)
      .def_readonly("warnings", &pmra::RecoveryTrace::warnings);

  m.def(
      "reconstruct",
      [](const pmra::MomentSet& ms) {
        auto rec = pmra::reconstruct(ms);
        return py::make_tuple(rec.signal.values(), rec.trace);
      },
      "moments"_a, "Constructive orbit recovery; returns (signal, trace)");

  // --- estimators -------------------------------------------------------------
  py::class_<pmra::EMConfig>(m, "EMConfig")
      .def(py::init<>())
      .def_readwrite("starts", &pmra::EMConfig::starts)
      .def_readwrite("max_iters", &pmra::EMConfig::max_iters)
      .def_readwrite("rel_tol", &pmra::EMConfig::rel_tol)
      .def_readwrite("seed", &pmra::EMConfig::seed);

  py::class_<pmra::OptConfig>(m, "OptConfig")
      .def(py::init<>())
      .def_readwrite("starts", &pmra::OptConfig::starts)
      .def_readwrite("max_iters", &pmra::OptConfig::max_iters)
      .def_readwrite("max_fun_evals", &pmra::OptConfig::max_fun_evals)
      .def_readwrite("fun_tol", &pmra::OptConfig::fun_tol)
      .def_readwrite("step_tol", &pmra::OptConfig::step_tol)
      .def_readwrite("seed", &pmra::OptConfig::seed);

  py::class_<pmra::FitResult>(m, "FitResult")
      .def_property_readonly("estimate", [](const pmra::FitResult& r) { return r.estimate.values(); })
      .def_readonly("objective", &pmra::FitResult::objective)
      .def_readonly("iterations", &pmra::FitResult::iterations)
      .def_readonly("start_index", &pmra::FitResult::start_index)
      .def_readonly("trace", &pmra::FitResult::trace)
      .def_readonly("diagnostics", &pmra::FitResult::diagnostics);

  m.def("em_fit", py::overload_cast<const pmra::ObservationBatch&, double, const pmra::EMConfig&>(&pmra::em_fit),
        "batch"_a, "sigma"_a, "config"_a = pmra::EMConfig{});
  m.def("fit_T", py::overload_cast<const pmra::MomentSet&, const pmra::OptConfig&>(&pmra::fit_T),
        "moments"_a, "config"_a = pmra::OptConfig{});
  m.def("fit_M",
        py::overload_cast<const pmra::MomentSet&, const pmra::CosineMatrix&, const pmra::OptConfig&>(&pmra::fit_M),
        "moments"_a, "cosine_matrix"_a, "config"_a = pmra::OptConfig{});

  m.def(
      "generic_signal",
      [](int p, std::uint64_t seed) { return pmra::bench::generic_signal(p, seed).values(); }, "p"_a,
      "seed"_a, "Rejection-sampled unit-norm signal satisfying the recovery hypotheses");

#ifdef VERSION_INFO
  m.attr("__version__") = MACRO_STRINGIFY(VERSION_INFO);
#else
  m.attr("__version__") = "dev";
#endif
}

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "cseg/config.hpp"
#include "cseg/eval.hpp"
#include "cseg/losses.hpp"
#include "cseg/runner.hpp"
#include "cseg/synthdata.hpp"
#include "cseg/trainer.hpp"

namespace py = pybind11;
using namespace cseg;

namespace {

using F64 = py::array_t<double, py::array::c_style | py::array::forcecast>;
using U8 = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

Mask to_mask(const U8& a) {
    if (a.ndim() != 2) throw py::value_error("mask must be 2-D");
    Mask m(a.shape(0), a.shape(1));
    const auto* p = a.data();
    for (std::size_t k = 0; k < m.labels.size(); ++k) m.labels[k] = p[k] != 0;
    return m;
}

Image to_image(const F64& a) {
    if (a.ndim() != 2) throw py::value_error("image must be 2-D");
    Image img(a.shape(0), a.shape(1));
    std::copy(a.data(), a.data() + img.pixels.size(), img.pixels.begin());
    return img;
}

py::array_t<double> from_image(const Image& img) {
    py::array_t<double> out({img.height, img.width});
    std::copy(img.pixels.begin(), img.pixels.end(), out.mutable_data());
    return out;
}

py::array_t<std::uint8_t> from_mask(const Mask& m) {
    py::array_t<std::uint8_t> out({m.height, m.width});
    std::copy(m.labels.begin(), m.labels.end(), out.mutable_data());
    return out;
}

ExperimentConfig make_config(const py::dict& overrides) {
    ExperimentConfig c;
    for (const auto& [k, v] : overrides) {
        const std::string key = py::str(k);
        std::string value;
        if (py::isinstance<py::list>(v) || py::isinstance<py::tuple>(v)) {
            for (const auto& item : v) value += (value.empty() ? "" : ",") + std::string(py::str(item));
        } else {
            value = py::str(v);
        }
        set_config_value(c, key, value);
    }
    c.validate();
    return c;
}

py::list trace_rows(const TrainingTrace& t) {
    py::list rows;
    for (const auto& r : t.records) {
        py::dict d;
        d["epoch"] = r.epoch;
        d["loss_y"] = r.loss_y;
        d["loss_u"] = r.loss_u;
        d["loss_total"] = r.loss_total;
        d["val_dsc"] = r.val_dsc;
        d["lr"] = r.lr;
        rows.append(d);
    }
    return rows;
}

}  // namespace

PYBIND11_MODULE(_cseg, m) {
    m.doc() = "Curriculum semi-supervised segmentation on synthetic data";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
    py::register_exception<AccessDenied>(m, "AccessDenied", PyExc_PermissionError);

    m.def("config_text", [](const py::dict& overrides) { return serialize_config(make_config(overrides)); },
          py::arg("overrides") = py::dict(), "Canonical key = value form of the default config with overrides applied.");
    m.def("config_hash", [](const py::dict& overrides) { return config_hash(make_config(overrides)); },
          py::arg("overrides") = py::dict());

    m.def(
        "generate_sample",
        [](std::uint64_t seed, std::uint64_t index, const py::dict& overrides) {
            const Sample s = generate_sample(seed, index, make_config(overrides).data);
            return py::make_tuple(from_image(s.image), from_mask(s.mask));
        },
        py::arg("seed"), py::arg("index"), py::arg("overrides") = py::dict(), "(image, mask) for one synthetic sample.");

    m.def(
        "make_membership",
        [](std::size_t total, std::size_t n, std::size_t validation, std::uint64_t seed) {
            const SplitMembership s = make_membership(total, n, validation, seed);
            py::dict d;
            d["labeled"] = s.labeled;
            d["unlabeled"] = s.unlabeled;
            d["validation"] = s.validation;
            return d;
        },
        py::arg("total"), py::arg("n_labeled"), py::arg("n_validation"), py::arg("seed"));

    m.def("augment", [](const F64& image, const U8& mask, std::uint64_t seed) {
        Rng rng(seed);
        py::list out;
        for (const auto& a : augment(Sample{to_image(image), to_mask(mask)}, rng)) {
            out.append(py::make_tuple(from_image(a.image), from_mask(a.mask), a.size_target));
        }
        return out;
    });

    m.def("dice", [](const U8& a, const U8& b) { return dice(to_mask(a), to_mask(b)).value; });

    m.def(
        "aggregate_last_k",
        [](const std::vector<double>& dsc, std::size_t k) {
            TrainingTrace t;
            for (std::size_t e = 0; e < dsc.size(); ++e) t.records.push_back({e, 0, 0, 0, dsc[e], 0});
            const MeanStd ms = aggregate_last_k(t, k);
            return py::make_tuple(ms.mean, ms.std);
        },
        py::arg("val_dsc"), py::arg("k"));

    m.def(
        "size_penalty",
        [](double soft_size, double estimate, double gamma) {
            return size_penalty_value(soft_size, SizeBand::around(estimate, gamma, SizeSource::regressor));
        },
        py::arg("soft_size"), py::arg("estimate"), py::arg("gamma"));

    m.def(
        "format_table",
        [](const std::vector<std::tuple<std::size_t, std::string, double, double>>& rows, std::uint64_t seed,
           const std::string& hash) {
            std::vector<ResultRow> rs;
            for (const auto& [n, arm, mean, sd] : rows) rs.push_back({n, arm, mean, sd, seed, hash});
            std::ostringstream s;
            write_table(s, rs);
            return s.str();
        },
        py::arg("rows"), py::arg("seed") = 0, py::arg("config_hash") = "");

    m.def(
        "train",
        [](const py::dict& overrides) {
            const ExperimentConfig c = make_config(overrides);
            ArmResult r;
            {
                py::gil_scoped_release release;
                r = run_arm(make_split(c), c);
            }
            const MeanStd agg = aggregate_last_k(r.segmenter.trace, c.effective_last_k());
            py::dict d;
            d["arm"] = arm_name(c.arm);
            d["trace"] = trace_rows(r.segmenter.trace);
            d["mean_dsc"] = agg.mean;
            d["std_dsc"] = agg.std;
            d["checkpoint"] = py::bytes(encode_checkpoint(r.segmenter.params));
            d["audit"] = py::dict(py::arg("unlabeled_pixel_reads") = r.audit.unlabeled_pixel_reads,
                                  py::arg("unlabeled_size_reads") = r.audit.unlabeled_size_reads,
                                  py::arg("augment_calls") = r.audit.augment_calls);
            return d;
        },
        py::arg("overrides") = py::dict(), "Train config['arm'] in memory and return its trace and summary.");

    m.def(
        "generate",
        [](const std::filesystem::path& out, const py::dict& overrides) {
            const ExperimentConfig c = make_config(overrides);
            py::gil_scoped_release release;
            return run_generate(c, out).artifacts.size();
        },
        py::arg("out"), py::arg("overrides") = py::dict());

    m.def(
        "sweep",
        [](const std::filesystem::path& out, const py::dict& overrides) {
            const ExperimentConfig c = make_config(overrides);
            {
                py::gil_scoped_release release;
                run_sweep(c, out);
            }
            return (out / "table.csv");
        },
        py::arg("out"), py::arg("overrides") = py::dict(), "Run the sweep into `out`; returns the table path.");
}

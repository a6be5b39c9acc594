// SPDX-License-Identifier: Apache-2.0
#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sdmimo/channel.hpp"
#include "sdmimo/estimator.hpp"
#include "sdmimo/experiments.hpp"
#include "sdmimo/io.hpp"
#include "sdmimo/pilots.hpp"
#include "sdmimo/sigma_delta.hpp"

namespace py = pybind11;
using namespace sdmimo;

namespace {

std::shared_ptr<const NoiseModel> as_shared(const NoiseModel& noise) {
    return std::make_shared<NoiseModel>(noise);
}

} // namespace

PYBIND11_MODULE(_sdmimo, m) {
    m.doc() = "1-bit spatial sigma-delta ADC simulation and MUSIC-based "
              "LoS MIMO channel estimation";

    py::class_<SigmaDeltaConfig>(m, "SigmaDeltaConfig")
        .def(py::init<Eigen::Index, double>(), py::arg("n_channels"), py::arg("level_b"))
        .def_readwrite("n_channels", &SigmaDeltaConfig::n_channels)
        .def_readwrite("level_b", &SigmaDeltaConfig::level_b);

    py::class_<QuantizationTrace>(m, "QuantizationTrace")
        .def_readonly("input_x", &QuantizationTrace::input_x)
        .def_readonly("prequant_r", &QuantizationTrace::prequant_r)
        .def_readonly("output_y", &QuantizationTrace::output_y)
        .def_readonly("noise_e", &QuantizationTrace::noise_e)
        .def_readonly("floor_noise_qtilde", &QuantizationTrace::floor_noise_qtilde);

    py::class_<NoiseModel>(m, "NoiseModel")
        .def_readonly("covariance", &NoiseModel::covariance)
        .def_readonly("inverse_sqrt", &NoiseModel::inverse_sqrt)
        .def_static("identity", &NoiseModel::identity, py::arg("n"));

    m.def("quantize_1bit", &quantize_1bit, py::arg("value"), py::arg("level_b"));
    m.def("limit_amplitude", &limit_amplitude, py::arg("value"), py::arg("level_b"));
    m.def("sigma_delta_forward", &sigma_delta_forward, py::arg("input_x"), py::arg("config"));
    m.def("quantization_noise_closed_form", &quantization_noise_closed_form,
          py::arg("input_x"), py::arg("config"));
    m.def("floor_identity_residual", &floor_identity_residual, py::arg("trace"),
          py::arg("config"));
    m.def("shaped_noise", &shaped_noise, py::arg("trace"), py::arg("config"));
    m.def("combined_noise_covariance", &combined_noise_covariance, py::arg("n_receive"),
          py::arg("level_b"));

    py::class_<ArrayGeometry>(m, "ArrayGeometry")
        .def(py::init<Eigen::Index, double, double>(), py::arg("n_elements"),
             py::arg("spacing_d") = 0.125, py::arg("wavelength") = 1.0)
        .def_readwrite("n_elements", &ArrayGeometry::n_elements)
        .def_readwrite("spacing_d", &ArrayGeometry::spacing_d)
        .def_readwrite("wavelength", &ArrayGeometry::wavelength)
        .def("spacing_ratio", &ArrayGeometry::spacing_ratio);

    py::class_<ChannelScenario>(m, "ChannelScenario")
        .def_readonly("aoa_theta_deg", &ChannelScenario::aoa_theta_deg)
        .def_readonly("aod_phi_deg", &ChannelScenario::aod_phi_deg)
        .def_readonly("gain_alpha", &ChannelScenario::gain_alpha)
        .def_readonly("channel", &ChannelScenario::channel);

    py::class_<TransmissionRecord>(m, "TransmissionRecord")
        .def_readonly("snr_power", &TransmissionRecord::snr_power)
        .def_readonly("noise", &TransmissionRecord::noise)
        .def_readonly("received", &TransmissionRecord::received)
        .def_readonly("quantized", &TransmissionRecord::quantized);

    m.def("steering_vector", &steering_vector, py::arg("angle_deg"), py::arg("geometry"));
    m.def("make_los_channel", &make_los_channel, py::arg("theta_deg"), py::arg("phi_deg"),
          py::arg("alpha"), py::arg("bs"), py::arg("ms"));
    m.def("synthesize_received", &synthesize_received, py::arg("scenario"),
          py::arg("transmit_s"), py::arg("snr_power"), py::arg("rng_seed"),
          py::arg("noiseless") = false);
    m.def(
        "receive_sigma_delta",
        [](TransmissionRecord record, const SigmaDeltaConfig& config) {
            receive_sigma_delta(record, config);
            return record;
        },
        py::arg("record"), py::arg("config"));

    py::class_<PilotSet>(m, "PilotSet")
        .def_readonly("hadamard_g", &PilotSet::hadamard_g)
        .def_readonly("predistorted_t", &PilotSet::predistorted_t)
        .def_readonly("transmit_s", &PilotSet::transmit_s);

    m.def("hadamard_matrix", &hadamard_matrix, py::arg("n"));
    m.def("predistort_pilots", &predistort_pilots, py::arg("n_transmit"));
    m.def("verify_pilots", &verify_pilots, py::arg("pilots"));
    m.def("repeat_blocks", &repeat_blocks, py::arg("s"), py::arg("repetition"));

    py::class_<AngleGrid>(m, "AngleGrid")
        .def(py::init<>())
        .def_readwrite("lo_deg", &AngleGrid::lo_deg)
        .def_readwrite("hi_deg", &AngleGrid::hi_deg)
        .def_readwrite("n_points", &AngleGrid::n_points)
        .def_readwrite("refine_tol_deg", &AngleGrid::refine_tol_deg);

    py::class_<SubspaceSplit>(m, "SubspaceSplit")
        .def_readonly("signal_left", &SubspaceSplit::signal_left)
        .def_readonly("noise_left", &SubspaceSplit::noise_left)
        .def_readonly("signal_right", &SubspaceSplit::signal_right)
        .def_readonly("noise_right", &SubspaceSplit::noise_right)
        .def_readonly("singular_values", &SubspaceSplit::singular_values);

    py::class_<SpectrumPeak>(m, "SpectrumPeak")
        .def_readonly("angle_deg", &SpectrumPeak::angle_deg)
        .def_readonly("spectrum", &SpectrumPeak::spectrum);

    py::class_<EstimationResult>(m, "EstimationResult")
        .def_readonly("theta_hat_deg", &EstimationResult::theta_hat_deg)
        .def_readonly("phi_hat_deg", &EstimationResult::phi_hat_deg)
        .def_readonly("alpha_hat", &EstimationResult::alpha_hat)
        .def_readonly("h_check", &EstimationResult::h_check)
        .def_readonly("spectrum_bs", &EstimationResult::spectrum_bs)
        .def_readonly("spectrum_ms", &EstimationResult::spectrum_ms);

    m.def(
        "whiten_despread",
        [](const Eigen::MatrixXcd& y, const Eigen::MatrixXcd& s, double power,
           const NoiseModel& noise, int repetition) {
            auto estimate = whiten_despread(y, s, power, as_shared(noise), repetition);
            return estimate.h_hat;
        },
        py::arg("quantized_y"), py::arg("transmit_s"), py::arg("snr_power"), py::arg("noise"),
        py::arg("repetition") = 1);
    m.def(
        "split_subspaces",
        [](const Eigen::MatrixXcd& h_hat) {
            return split_subspaces({h_hat, nullptr});
        },
        py::arg("h_hat"));
    m.def(
        "music_estimate_aoa",
        [](const SubspaceSplit& split, const NoiseModel& noise, const ArrayGeometry& bs,
           const AngleGrid& grid) { return music_estimate_aoa(split, noise, bs, grid); },
        py::arg("split"), py::arg("noise"), py::arg("bs_geometry"),
        py::arg("grid") = AngleGrid{});
    m.def(
        "music_estimate_aod",
        [](const SubspaceSplit& split, const ArrayGeometry& ms, const AngleGrid& grid) {
            return music_estimate_aod(split, ms, grid);
        },
        py::arg("split"), py::arg("ms_geometry"), py::arg("grid") = AngleGrid{});
    m.def(
        "estimate_gain",
        [](const Eigen::MatrixXcd& h_hat, double theta, double phi, const NoiseModel& noise,
           const ArrayGeometry& bs, const ArrayGeometry& ms) {
            return estimate_gain({h_hat, nullptr}, theta, phi, noise, bs, ms);
        },
        py::arg("h_hat"), py::arg("theta_hat_deg"), py::arg("phi_hat_deg"), py::arg("noise"),
        py::arg("bs_geometry"), py::arg("ms_geometry"));
    m.def("reconstruct_channel", &reconstruct_channel, py::arg("theta_hat_deg"),
          py::arg("phi_hat_deg"), py::arg("alpha_hat"), py::arg("bs_geometry"),
          py::arg("ms_geometry"));
    m.def(
        "estimate_channel",
        [](const Eigen::MatrixXcd& y, const Eigen::MatrixXcd& s, double power,
           const NoiseModel& noise, const ArrayGeometry& bs, const ArrayGeometry& ms,
           const AngleGrid& grid, int repetition) {
            return estimate_channel(y, s, power, as_shared(noise), bs, ms, grid, nullptr,
                                    nullptr, repetition);
        },
        py::arg("quantized_y"), py::arg("transmit_s"), py::arg("snr_power"), py::arg("noise"),
        py::arg("bs_geometry"), py::arg("ms_geometry"), py::arg("grid") = AngleGrid{},
        py::arg("repetition") = 1);

    py::enum_<Method>(m, "Method")
        .value("SD", Method::SD)
        .value("UQ", Method::UQ)
        .value("ONEBIT", Method::OneBit);

    py::class_<MonteCarloConfig>(m, "MonteCarloConfig")
        .def(py::init<>())
        .def_readwrite("n_transmit", &MonteCarloConfig::n_transmit)
        .def_readwrite("n_receive", &MonteCarloConfig::n_receive)
        .def_readwrite("spacing_ratio", &MonteCarloConfig::spacing_ratio)
        .def_readwrite("snr_db_list", &MonteCarloConfig::snr_db_list)
        .def_readwrite("angular_halfwidth_deg", &MonteCarloConfig::angular_halfwidth_deg)
        .def_readwrite("n_trials", &MonteCarloConfig::n_trials)
        .def_readwrite("base_seed", &MonteCarloConfig::base_seed)
        .def_readwrite("methods", &MonteCarloConfig::methods)
        .def_readwrite("repetition", &MonteCarloConfig::repetition)
        .def_readwrite("noiseless", &MonteCarloConfig::noiseless);

    py::class_<NmseRow>(m, "NmseRow")
        .def_readonly("method", &NmseRow::method)
        .def_readonly("snr_db", &NmseRow::snr_db)
        .def_readonly("nmse", &NmseRow::nmse)
        .def_readonly("std_error", &NmseRow::std_error)
        .def_readonly("n_trials", &NmseRow::n_trials);

    py::class_<NmseTable>(m, "NmseTable").def_readonly("rows", &NmseTable::rows);

    py::class_<CorrelationProfile>(m, "CorrelationProfile")
        .def_readonly("corr_sd", &CorrelationProfile::corr_sd)
        .def_readonly("corr_onebit", &CorrelationProfile::corr_onebit)
        .def_readonly("n_draws", &CorrelationProfile::n_draws);

    m.def("snr_db_to_power", &snr_db_to_power, py::arg("snr_db"));
    m.def("select_voltage_level", &select_voltage_level, py::arg("snr_power"),
          py::arg("n_transmit"));
    m.def("nmse_sweep", &nmse_sweep, py::arg("config"), py::arg("n_threads") = 0,
          py::call_guard<py::gil_scoped_release>());
    m.def("correlation_experiment", &correlation_experiment, py::arg("snr_db"),
          py::arg("n_draws"), py::arg("seed"), py::arg("config") = MonteCarloConfig{},
          py::call_guard<py::gil_scoped_release>());
    m.def("pearson_correlation", &pearson_correlation, py::arg("a"), py::arg("b"));

#ifdef SDMIMO_VERSION
    m.attr("__version__") = SDMIMO_VERSION;
#else
    m.attr("__version__") = "dev";
#endif
}

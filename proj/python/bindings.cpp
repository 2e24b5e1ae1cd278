#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "aftvo/aft.hpp"
#include "aftvo/commands.hpp"
#include "aftvo/config.hpp"
#include "aftvo/ekf.hpp"
#include "aftvo/eval.hpp"
#include "aftvo/mdn.hpp"
#include "aftvo/sim.hpp"

namespace py = pybind11;
using namespace aftvo;

namespace {

using Rows6 = Eigen::Matrix<double, Eigen::Dynamic, 6, Eigen::RowMajor>;

Rows6 pose_rows(const Trajectory& t) {
  Rows6 out(t.size(), 6);
  for (std::size_t i = 0; i < t.size(); ++i) out.row(i) = t[i].pose.to_vector().transpose();
  return out;
}

std::vector<Timestamp> stamps_of(const Trajectory& t) {
  std::vector<Timestamp> out;
  for (const auto& p : t) out.push_back(p.stamp);
  return out;
}

Trajectory trajectory_from(const std::vector<Timestamp>& stamps, const Rows6& poses) {
  if (static_cast<Eigen::Index>(stamps.size()) != poses.rows())
    throw std::invalid_argument("stamps and poses differ in length");
  Trajectory t;
  for (std::size_t i = 0; i < stamps.size(); ++i) t.push_back(stamps[i], Pose::from_vector(poses.row(i).transpose()));
  return t;
}

py::dict trajectory_dict(const Trajectory& t) {
  py::dict d;
  d["stamps"] = py::array(py::cast(stamps_of(t)));
  d["poses"] = pose_rows(t);
  return d;
}

mdn::MixtureParams mixture_from(const std::vector<double>& alpha, const Rows6& mu, const Rows6& sigma) {
  if (mu.rows() != static_cast<Eigen::Index>(alpha.size()) || sigma.rows() != mu.rows())
    throw std::invalid_argument("alpha, mu and sigma need one row per component");
  mdn::MixtureParams p;
  p.alpha = alpha;
  for (Eigen::Index i = 0; i < mu.rows(); ++i) {
    p.mu.push_back(mu.row(i).transpose());
    p.sigma.push_back(sigma.row(i).transpose());
  }
  p.validate();
  return p;
}

cli::RunConfig config_from(const std::string& config_json) {
  cli::RunConfig c = config_json.empty() ? cli::default_config()
                                         : cli::config_from_json(nlohmann::json::parse(config_json));
  cli::apply_seed_override(c);
  return c;
}

template <class F>
py::tuple logged(F&& f) {
  std::ostringstream log;
  int code;
  {
    py::gil_scoped_release release;
    code = f(log);
  }
  return py::make_tuple(code, log.str());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Asynchronous visual odometry fusion core";
  m.attr("__version__") = cli::version_string();

  static py::exception<aft::WindowTooLongError> window_error(m, "WindowTooLongError", PyExc_IndexError);
  static py::exception<cli::ConfigError> config_error(m, "ConfigError", PyExc_ValueError);
  static py::exception<mdn::TrainingError> training_error(m, "TrainingError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const aft::WindowTooLongError& e) {
      window_error(e.what());
    } catch (const cli::ConfigError& e) {
      config_error(e.what());
    } catch (const mdn::TrainingError& e) {
      training_error(e.what());
    }
  });

  m.def("default_config", [] { return cli::config_to_json(cli::default_config()).dump(); },
        "Default run configuration as a JSON string.");
  m.def("normalise_config", [](const std::string& j) { return cli::config_to_json(config_from(j)).dump(); },
        py::arg("config_json"), "Parses, validates and fills in a configuration.");

  m.def("discretise",
        [](const std::vector<Timestamp>& stamps, Timestamp step, std::size_t max_bins) {
          return aft::discretise(stamps, aft::DiscretiserConfig{step, max_bins});
        },
        py::arg("stamps"), py::arg("step") = 20'000, py::arg("max_bins") = 400,
        "Bin indices relative to the earliest stamp (microseconds).");

  m.def("relative_pose",
        [](const Vector6d& a, const Vector6d& b) {
          return relative_pose(Pose::from_vector(a), Pose::from_vector(b)).to_vector();
        },
        py::arg("a"), py::arg("b"));
  m.def("compose",
        [](const Vector6d& a, const Vector6d& rel) {
          return compose(Pose::from_vector(a), Pose::from_vector(rel)).to_vector();
        },
        py::arg("a"), py::arg("relative"));

  m.def("simulate",
        [](const std::string& preset, double duration_s, std::uint64_t seed, const std::string& kind) {
          sim::SimulationConfig c;
          c.kind = sim::parse_trajectory_kind(kind);
          c.duration_s = duration_s;
          c.sensors = cli::sensor_preset(preset, duration_s);
          const sim::Episode ep = sim::simulate_episode(c, seed);
          py::list streams;
          for (const auto& s : ep.streams) {
            Rows6 obs(s.entries.size(), 6);
            std::vector<Timestamp> stamps;
            std::vector<double> scale;
            for (std::size_t i = 0; i < s.entries.size(); ++i) {
              obs.row(i) = s.entries[i].observation.transpose();
              stamps.push_back(s.entries[i].timestamp);
              scale.push_back(s.entries[i].noise_scale);
            }
            py::dict d;
            d["source_id"] = s.source_id;
            d["origin"] = s.origin;
            d["stamps"] = py::array(py::cast(stamps));
            d["observations"] = obs;
            d["noise_scale"] = py::array(py::cast(scale));
            streams.append(d);
          }
          py::dict out;
          out["streams"] = streams;
          out["reference_stamps"] = py::array(py::cast(ep.reference_stamps));
          out["ground_truth"] = trajectory_dict(ep.ground_truth);
          return out;
        },
        py::arg("preset") = "asynchronous_triplet", py::arg("duration_s") = 40.0, py::arg("seed") = 1,
        py::arg("kind") = "random_smooth", "Simulates one episode for a named sensor preset.");

  m.def("rpe",
        [](const std::vector<Timestamp>& est_stamps, const Rows6& est_poses, const std::vector<Timestamp>& gt_stamps,
           const Rows6& gt_poses) {
          const eval::RpeReport r =
              eval::rpe(trajectory_from(est_stamps, est_poses), trajectory_from(gt_stamps, gt_poses));
          py::dict d;
          d["rmse"] = r.rmse;
          d["max"] = r.max;
          d["mean"] = r.mean;
          d["std"] = r.std;
          d["rot_rmse"] = r.rot_rmse;
          d["rot_max"] = r.rot_max;
          d["rot_mean"] = r.rot_mean;
          d["rot_std"] = r.rot_std;
          d["errors"] = py::array(py::cast(r.errors));
          d["rot_errors"] = py::array(py::cast(r.rot_errors));
          return d;
        },
        py::arg("est_stamps"), py::arg("est_poses"), py::arg("gt_stamps"), py::arg("gt_poses"),
        "Relative pose error of consecutive estimate stamps against ground truth.");

  m.def("mixture_nll",
        [](const std::vector<double>& alpha, const Rows6& mu, const Rows6& sigma, const Vector6d& y) {
          return mdn::mixture_nll(mixture_from(alpha, mu, sigma), y);
        },
        py::arg("alpha"), py::arg("mu"), py::arg("sigma"), py::arg("y"));
  m.def("mixture_moments",
        [](const std::vector<double>& alpha, const Rows6& mu, const Rows6& sigma) {
          const mdn::Moments mo = mdn::mixture_moments(mixture_from(alpha, mu, sigma));
          return py::make_tuple(mo.mean, mo.variance);
        },
        py::arg("alpha"), py::arg("mu"), py::arg("sigma"), "Mean and per-dimension variance.");

  m.def("run_ekf",
        [](const std::vector<int>& source_ids, const std::vector<Timestamp>& stamps,
           const std::vector<Timestamp>& previous, const Rows6& means, const Rows6& variances, Timestamp start_stamp,
           const Vector6d& start_pose, double q_velocity, double q_rate, double variance_inflation,
           const std::vector<Timestamp>& extra_stamps) {
          const std::size_t n = stamps.size();
          if (source_ids.size() != n || previous.size() != n || static_cast<std::size_t>(means.rows()) != n ||
              static_cast<std::size_t>(variances.rows()) != n)
            throw std::invalid_argument("measurement arrays differ in length");
          std::vector<ekf::EkfMeasurement> ms(n);
          for (std::size_t i = 0; i < n; ++i)
            ms[i] = {source_ids[i], stamps[i], previous[i], means.row(i).transpose(), variances.row(i).transpose()};
          ekf::EkfConfig cfg;
          cfg.q_velocity = q_velocity;
          cfg.q_rate = q_rate;
          cfg.variance_inflation = variance_inflation;
          return trajectory_dict(
              ekf::run_ekf(ms, {start_stamp, Pose::from_vector(start_pose)}, cfg, extra_stamps));
        },
        py::arg("source_ids"), py::arg("stamps"), py::arg("previous"), py::arg("means"), py::arg("variances"),
        py::arg("start_stamp"), py::arg("start_pose"), py::arg("q_velocity") = 3.0, py::arg("q_rate") = 0.1,
        py::arg("variance_inflation") = 1.0, py::arg("extra_stamps") = std::vector<Timestamp>{},
        "Constant-velocity EKF over relative-motion measurements.");

  m.def("generate",
        [](const std::string& config_json) {
          const cli::RunConfig c = config_from(config_json);
          return logged([&](std::ostream& log) { return cli::cmd_generate(c, log); });
        },
        py::arg("config_json"), "Returns (exit_code, log).");
  m.def("train",
        [](const std::string& config_json, const std::filesystem::path& data_dir, bool resume) {
          const cli::RunConfig c = config_from(config_json);
          cli::TrainOptions o;
          o.data_dir = data_dir;
          o.resume = resume;
          return logged([&](std::ostream& log) { return cli::cmd_train(c, o, log); });
        },
        py::arg("config_json"), py::arg("data_dir") = std::filesystem::path{}, py::arg("resume") = false);
  m.def("evaluate",
        [](const std::filesystem::path& checkpoint, const std::filesystem::path& data_dir,
           const std::filesystem::path& out_dir, bool axis_errors) {
          return logged([&](std::ostream& log) {
            return cli::cmd_evaluate(checkpoint, data_dir, out_dir, axis_errors, log);
          });
        },
        py::arg("checkpoint"), py::arg("data_dir"), py::arg("out_dir"), py::arg("axis_errors") = false);
  m.def("ablate",
        [](const std::string& config_json, const std::string& table) {
          const cli::RunConfig c = config_from(config_json);
          return logged([&](std::ostream& log) { return cli::cmd_ablate(c, table, log); });
        },
        py::arg("config_json"), py::arg("table") = "all");
  m.def("export_trajectory",
        [](const std::filesystem::path& checkpoint, const std::filesystem::path& episode_dir,
           const std::filesystem::path& out_file, const std::string& method) {
          return logged([&](std::ostream& log) {
            return cli::cmd_export(checkpoint, episode_dir, out_file, method, log);
          });
        },
        py::arg("checkpoint"), py::arg("episode_dir"), py::arg("out_file"), py::arg("method") = "aft");
}

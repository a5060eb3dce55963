#include "commands.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "gazedec/errors.hpp"
#include "gazedec/format.hpp"
#include "gazedec/report.hpp"
#include "gazedec/rng.hpp"

namespace gazedec::cli {

namespace {

constexpr std::uint64_t kTagCalibrateCmd = 61;

std::filesystem::path out_dir(const ExperimentConfig& cfg) {
  const std::filesystem::path dir = cfg.out_dir.empty() ? "out" : cfg.out_dir;
  std::filesystem::create_directories(dir);
  return dir;
}

void echo_config(const ExperimentConfig& cfg, const std::filesystem::path& dir) {
  std::ofstream out(dir / "config.resolved");
  if (!out) throw IoError("cannot write config.resolved");
  out << cfg.resolved_text();
}

Dataset load_required_dataset(const ExperimentConfig& cfg) {
  if (cfg.dataset_path.empty()) throw ConfigError("missing dataset path (paths.dataset / --dataset)");
  return load_dataset(cfg.dataset_path);
}

Params load_required_model(const ExperimentConfig& cfg) {
  if (cfg.model_path.empty()) throw ConfigError("missing model path (paths.model / --model)");
  return load_params(cfg.model_path);
}

void write_betas(const std::map<SubjectKey, GazeAngle>& betas, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "subject_id,flipped,beta_yaw,beta_pitch\n";
  for (const auto& [key, b] : betas) {
    out << key.id << ',' << (key.flipped ? '1' : '0') << ',' << g17(b.yaw) << ',' << g17(b.pitch)
        << '\n';
  }
}

}  // namespace

int cmd_synth(const ExperimentConfig& cfg) {
  const auto dir = out_dir(cfg);
  const SynthWorld world(cfg.world);
  const auto [dataset, profiles] = world.generate_dataset();
  save_dataset(dataset, dir / "dataset.csv");

  std::ofstream out(dir / "profiles.csv");
  if (!out) throw IoError("cannot write profiles.csv");
  out << "subject_id,flipped,bias_yaw,bias_pitch,slope_yy,slope_yp,slope_py,slope_pp";
  for (int j = 0; j < SynthWorld::kAppearanceDim; ++j) out << ",a" << j;
  out << '\n';
  for (const SubjectProfile& p : profiles) {
    out << p.key.id << ',' << (p.key.flipped ? '1' : '0') << ',' << g17(p.bias.yaw) << ','
        << g17(p.bias.pitch);
    for (double s : p.bias_slope) out << ',' << g17(s);
    for (double a : p.appearance) out << ',' << g17(a);
    out << '\n';
  }
  echo_config(cfg, dir);
  return 0;
}

int cmd_train(const ExperimentConfig& cfg) {
  const auto dir = out_dir(cfg);
  const Dataset data = load_required_dataset(cfg);
  const Architecture arch = cfg.make_architecture(data.feature_dim());
  const TrainedDecomposition trained = train(data, arch, cfg.train);

  save_params(trained.params, dir / "model.params");
  write_betas(trained.train_biases, dir / "betas.csv");

  std::ofstream hist(dir / "loss_history.csv");
  if (!hist) throw IoError("cannot write loss_history.csv");
  hist << "epoch,loss\n";
  for (std::size_t e = 0; e < trained.history.size(); ++e) {
    hist << (e + 1) << ',' << g17(trained.history[e]) << '\n';
  }
  echo_config(cfg, dir);
  return 0;
}

int cmd_calibrate(const ExperimentConfig& cfg) {
  const auto dir = out_dir(cfg);
  const Params model = load_required_model(cfg);
  const Dataset data = load_required_dataset(cfg);

  std::ofstream out(dir / "report.csv");
  if (!out) throw IoError("cannot write report.csv");
  out << "trial,subject_id,flipped,method,status,dc_size,bias_yaw,bias_pitch,n_calibration,"
         "eval_error_deg,n_eval\n";

  auto eval_error = [&](const Params& m, const GazeAngle& bias, const std::vector<int>& subject_idx,
                        const std::vector<int>& excluded) {
    std::vector<int> eval;
    std::size_t e = 0;
    std::vector<int> ex = excluded;
    std::sort(ex.begin(), ex.end());
    for (int i : subject_idx) {
      while (e < ex.size() && ex[e] < i) ++e;
      if (e < ex.size() && ex[e] == i) continue;
      eval.push_back(i);
    }
    if (eval.empty()) eval = subject_idx;
    double sum = 0.0;
    for (int i : eval) {
      const Sample& s = data[static_cast<std::size_t>(i)];
      sum += angular_error_deg(predict(m, bias, s.features), s.gaze);
    }
    return std::pair<double, int>{sum / static_cast<double>(eval.size()),
                                  static_cast<int>(eval.size())};
  };

  const auto& subjects = data.subjects();

  if (cfg.method == CalibrationMethod::none) {
    for (std::size_t si = 0; si < subjects.size(); ++si) {
      const auto [err, n_eval] = eval_error(model, GazeAngle{}, data.indices_of(subjects[si]), {});
      out << 0 << ',' << subjects[si].id << ',' << (subjects[si].flipped ? '1' : '0')
          << ",none,ok,0,,,0," << f6(err) << ',' << n_eval << '\n';
    }
    echo_config(cfg, dir);
    return 0;
  }

  for (int trial = 0; trial < cfg.trials; ++trial) {
    for (std::size_t si = 0; si < subjects.size(); ++si) {
      const SubjectKey& key = subjects[si];
      const auto& idx = data.indices_of(key);
      auto rng = make_rng(cfg.seed, kTagCalibrateCmd + static_cast<std::uint64_t>(trial), si);

      std::optional<CalibrationSet> dc;
      if (cfg.protocol == Protocol::sgpc) {
        double ylo = 90, yhi = -90, plo = 90, phi = -90;
        for (int i : idx) {
          const GazeAngle& g = data[static_cast<std::size_t>(i)].gaze;
          ylo = std::min(ylo, g.yaw);
          yhi = std::max(yhi, g.yaw);
          plo = std::min(plo, g.pitch);
          phi = std::max(phi, g.pitch);
        }
        std::uniform_real_distribution<double> yaw_u(ylo, yhi);
        std::uniform_real_distribution<double> pitch_u(plo, phi);
        for (int attempt = 0; attempt < 64 && !dc; ++attempt) {
          dc = select_sgpc_set(data, key, GazeAngle{yaw_u(rng), pitch_u(rng)}, cfg.dc_size,
                               cfg.radius, rng);
        }
      } else if (static_cast<int>(idx.size()) >= cfg.dc_size) {
        dc = select_mgpc_set(data, key, cfg.dc_size, rng);
      }

      out << trial << ',' << key.id << ',' << (key.flipped ? '1' : '0') << ','
          << to_string(cfg.method) << ',';
      if (!dc) {
        out << "skipped," << cfg.dc_size << ",,,0,,0\n";
        continue;
      }

      switch (cfg.method) {
        case CalibrationMethod::offset: {
          const CalibrationOutcome o = estimate_bias_offset(model, *dc);
          const auto [err, n_eval] = eval_error(model, o.bias_estimate, idx, dc->source_indices);
          out << "ok," << cfg.dc_size << ',' << f6(o.bias_estimate.yaw) << ','
              << f6(o.bias_estimate.pitch) << ',' << dc->samples.size() << ',' << f6(err) << ','
              << n_eval << '\n';
          break;
        }
        case CalibrationMethod::fc: {
          const Params refit = calibrate_fc(model, *dc, cfg.fc_ridge);
          const auto [err, n_eval] = eval_error(refit, GazeAngle{}, idx, dc->source_indices);
          out << "ok," << cfg.dc_size << ",,," << dc->samples.size() << ',' << f6(err) << ','
              << n_eval << '\n';
          break;
        }
        case CalibrationMethod::la: {
          try {
            const AffineCorrection corr = calibrate_la(model, *dc);
            std::vector<int> eval;
            for (int i : idx) eval.push_back(i);
            double sum = 0.0;
            int n_eval = 0;
            std::vector<int> ex = dc->source_indices;
            std::sort(ex.begin(), ex.end());
            std::size_t e = 0;
            for (int i : idx) {
              while (e < ex.size() && ex[e] < i) ++e;
              if (e < ex.size() && ex[e] == i) continue;
              const Sample& s = data[static_cast<std::size_t>(i)];
              sum += angular_error_deg(corr.apply(forward(model, s.features)), s.gaze);
              ++n_eval;
            }
            if (n_eval == 0) {
              for (int i : idx) {
                const Sample& s = data[static_cast<std::size_t>(i)];
                sum += angular_error_deg(corr.apply(forward(model, s.features)), s.gaze);
                ++n_eval;
              }
            }
            out << "ok," << cfg.dc_size << ",,," << dc->samples.size() << ','
                << f6(sum / n_eval) << ',' << n_eval << '\n';
          } catch (const NotApplicableError&) {
            out << "na," << cfg.dc_size << ",,," << dc->samples.size() << ",,0\n";
          }
          break;
        }
        case CalibrationMethod::none:
          break;  // handled above
      }
    }
  }
  echo_config(cfg, dir);
  return 0;
}

int cmd_eval(const ExperimentConfig& cfg) {
  const auto dir = out_dir(cfg);
  const Params model = load_required_model(cfg);
  const Dataset data = load_required_dataset(cfg);
  const EvalReport rep = full_report(model, data);

  std::ofstream out(dir / "report.csv");
  if (!out) throw IoError("cannot write report.csv");
  out << "record,subject_id,flipped,count,mean_error_deg,residual_mean_yaw,residual_mean_pitch,"
         "residual_sd_yaw,residual_sd_pitch\n";
  long total = 0;
  for (const auto& [key, ps] : rep.per_subject) {
    total += ps.count;
    out << "subject," << key.id << ',' << (key.flipped ? '1' : '0') << ',' << ps.count << ','
        << f6(ps.mean_error) << ',' << f6(ps.residual_mean.yaw) << ',' << f6(ps.residual_mean.pitch)
        << ',' << f6(ps.residual_sd.yaw) << ',' << f6(ps.residual_sd.pitch) << '\n';
  }
  out << "calibration_free,,," << total << ',' << f6(rep.calibration_free_error) << ",,,,\n";
  out << "lower_bound,,," << total << ',' << f6(rep.lower_bound_error) << ",,,,\n";
  echo_config(cfg, dir);
  return 0;
}

int cmd_grid(const ExperimentConfig& cfg) {
  const auto dir = out_dir(cfg);
  const Params model = load_required_model(cfg);
  const Dataset data = load_required_dataset(cfg);
  GridSpec spec = cfg.grid;
  spec.seed = cfg.seed;
  const GridReport rep = grid_robustness_map(model, data, spec);

  std::ofstream out(dir / "report.csv");
  if (!out) throw IoError("cannot write report.csv");
  out << "yaw_lo,yaw_hi,pitch_lo,pitch_hi,mean_error_deg,standard_error,benefit_count,subjects,"
         "feasible_points\n";
  for (const GridCell& c : rep.cells) {
    out << g17(c.yaw_lo) << ',' << g17(c.yaw_hi) << ',' << g17(c.pitch_lo) << ','
        << g17(c.pitch_hi) << ',';
    if (std::isnan(c.mean_error)) {
      out << ",,";
    } else {
      out << f6(c.mean_error) << ',' << (std::isnan(c.standard_error) ? "" : f6(c.standard_error))
          << ',';
    }
    out << c.benefit_count << ',' << c.subjects_counted << ',' << c.feasible_points << '\n';
  }
  write_grid_svg(rep, dir / "grid.svg");
  echo_config(cfg, dir);
  return 0;
}

int cmd_analyze(const ExperimentConfig& cfg) {
  const auto dir = out_dir(cfg);
  const Params model = load_required_model(cfg);
  const Dataset data = load_required_dataset(cfg);
  const BiasVarianceReport rep = bias_variance_decomposition(model, data);

  std::ofstream out(dir / "report.csv");
  if (!out) throw IoError("cannot write report.csv");
  out << "metric,value\n";
  out << "mean_squared_bias," << f6(rep.mean_squared_bias) << '\n';
  out << "mean_intra_subject_variance," << f6(rep.mean_intra_subject_variance) << '\n';
  out << "squared_bias_yaw," << f6(rep.squared_bias_per_axis.yaw) << '\n';
  out << "squared_bias_pitch," << f6(rep.squared_bias_per_axis.pitch) << '\n';
  out << "intra_variance_yaw," << f6(rep.intra_variance_per_axis.yaw) << '\n';
  out << "intra_variance_pitch," << f6(rep.intra_variance_per_axis.pitch) << '\n';
  out << "subjects_used," << rep.subjects_used << '\n';
  out << "subjects_excluded," << rep.excluded.size() << '\n';
  echo_config(cfg, dir);
  return 0;
}

int cmd_crossval(const ExperimentConfig& cfg) {
  const auto dir = out_dir(cfg);
  const Dataset data = load_required_dataset(cfg);
  const Architecture arch = cfg.make_architecture(data.feature_dim());
  const BetaConsistency rep = train_biases_consistency(data, arch, cfg.train, cfg.pair_flipped);

  std::ofstream out(dir / "report.csv");
  if (!out) throw IoError("cannot write report.csv");
  out << "record,subject_id,flipped,folds,yaw_mean,yaw_sd,pitch_mean,pitch_sd\n";
  for (const auto& [key, ps] : rep.per_subject) {
    out << "subject," << key.id << ',' << (key.flipped ? '1' : '0') << ',' << ps.folds << ','
        << f6(ps.mean.yaw) << ',' << f6(ps.sd.yaw) << ',' << f6(ps.mean.pitch) << ','
        << f6(ps.sd.pitch) << '\n';
  }
  out << "intra_subject_variance,,,," << f6(rep.intra_subject_variance.yaw) << ",,"
      << f6(rep.intra_subject_variance.pitch) << ",\n";
  out << "inter_subject_variance,,,," << f6(rep.inter_subject_variance.yaw) << ",,"
      << f6(rep.inter_subject_variance.pitch) << ",\n";
  const double ry = rep.inter_subject_variance.yaw > 0
                        ? rep.intra_subject_variance.yaw / rep.inter_subject_variance.yaw
                        : 0.0;
  const double rp = rep.inter_subject_variance.pitch > 0
                        ? rep.intra_subject_variance.pitch / rep.inter_subject_variance.pitch
                        : 0.0;
  out << "intra_over_inter,,,," << f6(ry) << ",," << f6(rp) << ",\n";
  echo_config(cfg, dir);
  return 0;
}

}  // namespace gazedec::cli

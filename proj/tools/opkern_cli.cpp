#include <openssl/evp.h>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "opkern/builders.hpp"
#include "opkern/dilation.hpp"
#include "opkern/gaussian.hpp"
#include "opkern/io.hpp"
#include "opkern/regression.hpp"
#include "opkern/transfer.hpp"

namespace {

using namespace opkern;
using io::json;

enum Exit : int { kOk = 0, kViolation = 1, kInputError = 2, kHypothesis = 3 };

struct Options {
  std::string spec;
  std::string out;
  std::string train;
  std::string fit;
  std::string query;
  std::uint64_t seed = 0;
  std::size_t samples = 0;
  std::optional<double> tol;
  bool no_timestamp = false;
  bool seed_given = false;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io::SpecError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
  std::ostringstream ss;
  for (unsigned int i = 0; i < len; ++i)
    ss << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return ss.str();
}

json parse_json_text(const std::string& text, const std::string& path) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw io::SpecError("invalid JSON in '" + path + "': " + e.what());
  }
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

void emit_text(const Options& opt, const std::string& text) {
  if (opt.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(opt.out, std::ios::binary);
  if (!out) throw io::SpecError("cannot write '" + opt.out + "'");
  out << text;
}

void emit(const Options& opt, json report, const std::string& command) {
  report["command"] = command;
  if (!opt.no_timestamp) report["timestamp"] = utc_timestamp();
  emit_text(opt, report.dump(2) + "\n");
}

struct LoadedSpec {
  json doc;
  std::string sha;
};

LoadedSpec load_spec(const std::string& path) {
  if (path.empty()) throw io::SpecError("--spec is required");
  const std::string text = read_file(path);
  return {parse_json_text(text, path), sha256_hex(text)};
}

// check-pd ---------------------------------------------------------------

int cmd_check_pd(const Options& opt) {
  const auto spec = load_spec(opt.spec);
  const OperatorKernelTable k = io::kernel_from_spec(spec.doc);
  const PdReport r = is_positive_definite(k, opt.tol.value_or(kDefaultTol));
  emit(opt,
       json{{"pd", r.pd},
            {"min_eig", r.min_eig},
            {"threshold", r.threshold},
            {"n", k.n()},
            {"d", k.dim_h()},
            {"spec_sha256", spec.sha}},
       "check-pd");
  return r.pd ? kOk : kViolation;
}

// factorize --------------------------------------------------------------

int cmd_factorize(const Options& opt) {
  const auto spec = load_spec(opt.spec);
  const OperatorKernelTable k = io::kernel_from_spec(spec.doc);
  const double tol = opt.tol.value_or(kDefaultTol);
  try {
    const FeatureSystem f = kolmogorov_factorize(k, tol);
    const double residual = reproduction_residual(f, k);
    const double bound = tol * std::max(k.scale(), 1e-300);
    json report = io::feature_system_to_json(f);
    report["reproduction_residual"] = residual;
    report["residual_bound"] = bound;
    report["spec_sha256"] = spec.sha;
    emit(opt, report, "factorize");
    return residual <= bound ? kOk : kViolation;
  } catch (const NotPositiveDefinite& e) {
    emit(opt, json{{"pd", false}, {"min_eig", e.min_eig()}, {"spec_sha256", spec.sha}},
         "factorize");
    return kViolation;
  }
}

// realize ----------------------------------------------------------------

int cmd_realize(const Options& opt) {
  const auto spec = load_spec(opt.spec);
  const io::SystemSpec s = io::system_from_json(spec.doc);
  const double tol = opt.tol.value_or(1e-8);
  json report{{"spec_sha256", spec.sha}};

  const double equiv = equivalence_residual(s.k1, s.k2, s.l1, s.l2, s.t);
  report["c11_residual"] = equiv;
  std::optional<SignedKernelSystem> sys_opt;
  try {
    sys_opt = validate_system(s.k1, s.k2, s.l1, s.l2, s.t, tol);
  } catch (const NotEquivalent&) {
    report["ok"] = false;
    emit(opt, report, "realize");
    return kViolation;
  } catch (const NotPositiveDefinite& e) {
    report["ok"] = false;
    report["not_positive_definite"] = json{{"kernel", e.which()}, {"min_eig", e.min_eig()}};
    emit(opt, report, "realize");
    return kViolation;
  }
  const SignedKernelSystem& sys = *sys_opt;
  const double scale = std::max(sys.scale(), 1e-300);
  report["scale"] = sys.scale();

  std::optional<TransferRealization> real_opt;
  try {
    real_opt = construct_partial_isometry(sys);
  } catch (const GramMismatch& e) {
    report["ok"] = false;
    report["gram_mismatch"] = e.residual();
    emit(opt, report, "realize");
    return kViolation;
  }
  const TransferRealization& real = *real_opt;
  const double defect = partial_isometry_defect(real);
  const double intertwining = intertwining_residual(real);
  report["partial_isometry_defect"] = defect;
  report["eq_a6_residual"] = intertwining;
  report["dims"] = json{{"r_k1", real.a.rows()},
                        {"r_k2", real.a.cols()},
                        {"r_l1", real.b.cols()},
                        {"r_l2", real.c.rows()}};

  RealizationReport rr;
  try {
    rr = verify_realization(real, sys, tol);
  } catch (const NotInvertible& e) {
    report["ok"] = false;
    report["not_invertible"] = json{{"label", e.label()}, {"sigma_min", e.sigma_min()}};
    emit(opt, report, "realize");
    return kHypothesis;
  }
  report["eq_c8_residual"] = rr.feature_residual;
  report["eq_c10_residual"] = rr.kernel_residual;
  report["transitive_action"] = transitive_action_check(sys, real);

  bool rn_ok = true;
  report["rn_spectrum"] = nullptr;
  report["rn_vs_transfer"] = nullptr;
  if (kernel_leq(sys.k1, sys.k2)) {
    try {
      const RnTransferReport rn = verify_rn_transfer_identity(sys, tol);
      report["rn_spectrum"] = json::array({rn.rn_min, rn.rn_max});
      report["rn_vs_transfer"] = rn.rn_vs_transfer;
      rn_ok = rn.ok;
    } catch (const SpectrumOutOfRange& e) {
      report["rn_spectrum"] = json::array({e.lo(), e.hi()});
      rn_ok = false;
    }
  }
  const bool ok = defect <= tol && intertwining <= tol * scale && rr.ok && rn_ok;
  report["ok"] = ok;
  emit(opt, report, "realize");
  return ok ? kOk : kViolation;
}

// rn ---------------------------------------------------------------------

int cmd_rn(const Options& opt) {
  const auto spec = load_spec(opt.spec);
  const double tol = opt.tol.value_or(1e-9);
  json report{{"spec_sha256", spec.sha}};
  if (spec.doc.contains("K1")) {
    const io::SystemSpec s = io::system_from_json(spec.doc);
    const SignedKernelSystem sys = validate_system(s.k1, s.k2, s.l1, s.l2, s.t);
    const RnTransferReport rn = verify_rn_transfer_identity(sys, std::max(tol, 1e-8));
    report["rn_spectrum"] = json::array({rn.rn_min, rn.rn_max});
    report["rn_vs_transfer"] = rn.rn_vs_transfer;
    report["rn_vs_transfer_minimal"] = rn.rn_vs_transfer_minimal;
    report["scale"] = rn.scale;
    report["ok"] = rn.ok;
    emit(opt, report, "rn");
    return rn.ok ? kOk : kViolation;
  }
  const OperatorKernelTable l = io::kernel_from_spec(spec.doc.at("L"));
  const OperatorKernelTable k = io::kernel_from_spec(spec.doc.at("K"));
  const RNDerivative d = radon_nikodym(l, k, tol);
  report["phi"] = io::to_json(d.phi);
  report["sqrt_phi"] = io::to_json(d.sqrt_phi);
  report["rn_spectrum"] = json::array({d.spectrum_min, d.spectrum_max});
  report["r"] = d.basis.dilation_dim();
  emit(opt, report, "rn");
  return kOk;
}

// sample -----------------------------------------------------------------

int cmd_sample(const Options& opt) {
  const auto spec = load_spec(opt.spec);
  const OperatorKernelTable k = io::kernel_from_spec(spec.doc);
  if (opt.samples == 0) throw io::SpecError("--samples must be positive");
  const GaussianSampler sampler = make_sampler(k, opt.seed, opt.tol.value_or(kDefaultTol));
  const PathBatch batch = sampler.sample(0, opt.samples);
  std::ostringstream csv;
  io::write_paths_csv(csv, batch);
  emit_text(opt, csv.str());
  return kOk;
}

// mc-verify --------------------------------------------------------------

int cmd_mc_verify(const Options& opt) {
  const auto spec = load_spec(opt.spec);
  const io::JointSpec j = io::joint_from_json(spec.doc);
  const double tol = opt.tol.value_or(kDefaultTol);
  const std::size_t n = opt.samples == 0 ? 200000 : opt.samples;
  json report{{"spec_sha256", spec.sha}, {"seed", opt.seed}, {"samples", n}};
  std::optional<JointKernel> joint;
  try {
    joint = assemble_joint(j.k, j.l, j.coupling, tol);
  } catch (const NotPositiveDefinite& e) {
    report["pass"] = false;
    report["not_positive_definite"] = json{{"kernel", e.which()}, {"min_eig", e.min_eig()}};
    emit(opt, report, "mc-verify");
    return kViolation;
  }
  const McConditionalReport r = mc_verify_conditional(*joint, opt.seed, n);
  report["mean_map_truth"] = io::to_json(r.mean_map_truth);
  report["mean_map_estimate"] = io::to_json(r.mean_map_estimate);
  report["cond_cov_truth"] = io::to_json(r.cond_cov_truth);
  report["cond_cov_estimate"] = io::to_json(r.cond_cov_estimate);
  report["mean_map_max_z"] = r.mean_map_max_z;
  report["cond_cov_max_z"] = r.cond_cov_max_z;
  report["pass"] = r.pass;
  emit(opt, report, "mc-verify");
  return r.pass ? kOk : kViolation;
}

// condition --------------------------------------------------------------

int cmd_condition(const Options& opt) {
  const auto spec = load_spec(opt.spec);
  const io::JointSpec j = io::joint_from_json(spec.doc);
  if (!j.observed_l) throw io::SpecError("joint spec needs 'observed_L' for condition");
  const double tol = opt.tol.value_or(kDefaultTol);
  json report{{"spec_sha256", spec.sha}};
  std::optional<JointKernel> joint;
  try {
    joint = assemble_joint(j.k, j.l, j.coupling, tol);
  } catch (const NotPositiveDefinite& e) {
    report["not_positive_definite"] = json{{"kernel", e.which()}, {"min_eig", e.min_eig()}};
    emit(opt, report, "condition");
    return kViolation;
  }
  const ConditionalLaw law = condition(*joint, *j.observed_l, tol);
  report["mean"] = io::to_json(law.mean);
  report["mean_map"] = io::to_json(law.mean_map);
  report["cond_cov"] = io::blocks_to_json(law.cond_cov);
  report["schur_min_eig"] = joint->schur_min_eig;
  emit(opt, report, "condition");
  return kOk;
}

// krr-fit / krr-predict --------------------------------------------------

int cmd_krr_fit(const Options& opt) {
  const auto spec = load_spec(opt.spec);
  const OperatorKernelTable k = io::kernel_from_spec(spec.doc.at("K"));
  const OperatorKernelTable l = io::kernel_from_spec(spec.doc.at("L"));
  if (opt.train.empty()) throw io::SpecError("--train is required");
  const std::string train_text = read_file(opt.train);
  std::istringstream train_in(train_text);
  const TrainingSet train = io::read_training_csv(train_in, k.dim_h());
  if (train.size() == 0) throw io::SpecError("training set is empty");
  const RegressionFit fit = krr_fit(k, l, train, opt.tol.value_or(kDefaultTol));

  json samples = json::array();
  for (const auto& s : train.samples)
    samples.push_back(json{{"label", s.label}, {"a", io::to_json(s.a)}, {"y", io::to_json(s.y)}});
  emit(opt,
       json{{"coefficients", io::to_json(fit.coefficients)},
            {"fitted", io::to_json(fit.fitted)},
            {"training", samples},
            {"K", io::kernel_to_spec(k)},
            {"spec_sha256", spec.sha},
            {"kernel_sha256", {{"K", sha256_hex(spec.doc.at("K").dump())},
                               {"L", sha256_hex(spec.doc.at("L").dump())}}},
            {"train_sha256", sha256_hex(train_text)}},
       "krr-fit");
  return kOk;
}

int cmd_krr_predict(const Options& opt) {
  if (opt.fit.empty() || opt.query.empty()) throw io::SpecError("--fit and --query are required");
  const std::string fit_text = read_file(opt.fit);
  const json doc = parse_json_text(fit_text, opt.fit);
  RegressionFit fit{.coefficients = io::vector_from_json(doc.at("coefficients")),
                    .fitted = io::vector_from_json(doc.at("fitted")),
                    .training = {},
                    .k = io::kernel_from_spec(doc.at("K"))};
  for (const auto& s : doc.at("training"))
    fit.training.samples.push_back(TrainingSample{s.at("label").get<std::string>(),
                                                  io::vector_from_json(s.at("a")),
                                                  io::complex_from_json(s.at("y"))});
  if (static_cast<std::size_t>(fit.coefficients.size()) != fit.training.size())
    throw io::SpecError("fit file: coefficient count does not match the training set");

  std::ifstream qin(opt.query);
  if (!qin) throw io::SpecError("cannot open '" + opt.query + "'");
  const TrainingSet queries = io::read_training_csv(qin, fit.k.dim_h(), false);
  json preds = json::array();
  for (const auto& q : queries.samples)
    preds.push_back(json{{"label", q.label}, {"a", io::to_json(q.a)},
                         {"prediction", io::to_json(predict(fit, q.label, q.a))}});
  emit(opt, json{{"predictions", preds}, {"fit_sha256", sha256_hex(fit_text)}}, "krr-predict");
  return kOk;
}

int run(const std::string& command, const Options& opt) {
  try {
    if (command == "check-pd") return cmd_check_pd(opt);
    if (command == "factorize") return cmd_factorize(opt);
    if (command == "realize") return cmd_realize(opt);
    if (command == "rn") return cmd_rn(opt);
    if (command == "sample") return cmd_sample(opt);
    if (command == "mc-verify") return cmd_mc_verify(opt);
    if (command == "condition") return cmd_condition(opt);
    if (command == "krr-fit") return cmd_krr_fit(opt);
    if (command == "krr-predict") return cmd_krr_predict(opt);
  } catch (const io::SpecError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const json::exception& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const InvalidKernel& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const ShapeError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const LabelError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const NotStrictContraction& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const NotInvertible& e) {
    std::cerr << "hypothesis failure: " << e.what() << "\n";
    return kHypothesis;
  } catch (const NotDominated& e) {
    std::cerr << "hypothesis failure: " << e.what() << "\n";
    return kHypothesis;
  } catch (const SingularL& e) {
    std::cerr << "hypothesis failure: " << e.what() << "\n";
    return kHypothesis;
  } catch (const SingularSystem& e) {
    std::cerr << "hypothesis failure: " << e.what() << "\n";
    return kHypothesis;
  } catch (const Error& e) {
    std::cerr << "violation: " << e.what() << "\n";
    return kViolation;
  }
  std::cerr << "unknown command '" << command << "'\n";
  return kInputError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Operator-valued kernel toolkit"};
  app.require_subcommand(1);

  Options opt;
  struct Command {
    const char* name;
    const char* help;
  };
  const Command commands[] = {
      {"check-pd", "Test a kernel spec for positive definiteness"},
      {"factorize", "Kolmogorov factorization of a kernel spec"},
      {"realize", "Transfer-function realization of a four-kernel system"},
      {"rn", "Radon-Nikodym derivative of L with respect to K"},
      {"sample", "Sample Gaussian paths of a kernel to CSV"},
      {"mc-verify", "Monte-Carlo check of Gaussian conditioning"},
      {"condition", "Conditional law of the K-part given an observed L-path"},
      {"krr-fit", "Fit operator-valued kernel ridge regression"},
      {"krr-predict", "Evaluate a saved regression fit at query points"},
  };
  std::vector<CLI::App*> subs;
  std::vector<CLI::Option*> seed_opts;
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--spec", opt.spec, "Input spec (JSON)")->check(CLI::ExistingFile);
    seed_opts.push_back(sub->add_option("--seed", opt.seed, "RNG seed (default 0 or $OPKERN_SEED)"));
    sub->add_option("--samples", opt.samples, "Number of Monte-Carlo samples");
    sub->add_option("--tol", opt.tol, "Tolerance (relative)");
    sub->add_option("--out", opt.out, "Output file (default stdout)");
    sub->add_flag("--no-timestamp", opt.no_timestamp, "Omit the timestamp from reports");
    sub->add_option("--train", opt.train, "Training CSV")->check(CLI::ExistingFile);
    sub->add_option("--fit", opt.fit, "Fit JSON from krr-fit")->check(CLI::ExistingFile);
    sub->add_option("--query", opt.query, "Query CSV")->check(CLI::ExistingFile);
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInputError;
  }

  std::string command;
  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (!subs[i]->parsed()) continue;
    command = subs[i]->get_name();
    opt.seed_given = seed_opts[i]->count() > 0;
  }
  if (!opt.seed_given) {
    if (const char* env = std::getenv("OPKERN_SEED")) {
      try {
        std::size_t used = 0;
        opt.seed = std::stoull(env, &used);
        if (env[used] != '\0') throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        std::cerr << "input error: OPKERN_SEED must be an unsigned integer\n";
        return kInputError;
      }
    }
  }
  return run(command, opt);
}

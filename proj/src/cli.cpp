#include "prenmf/cli.hpp"

#include "prenmf/error.hpp"
#include "prenmf/fixtures.hpp"
#include "prenmf/nmf.hpp"
#include "prenmf/npp3.hpp"
#include "prenmf/preprocess.hpp"
#include "prenmf/uniq.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace prenmf::cli {
namespace {

using nlohmann::json;

json to_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// Short, filesystem-safe rendering of a parameter value.
std::string tag(double v) {
  std::ostringstream s;
  s << v;
  std::string out = s.str();
  std::replace(out.begin(), out.end(), '-', 'm');
  return out;
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
}

void save_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json environment(const RunConfig& cfg, const std::string& command) {
  json seeds = json::array();
  for (int s = 0; s < cfg.seeds; ++s) seeds.push_back(s);
  return {{"command", command},
          {"schema_version", kReportVersion},
          {"seeds", seeds},
          {"max_outer", cfg.max_outer},
          {"extra_iters", cfg.extra_iters},
          {"zero_tol", cfg.zero_tol},
          {"threads", omp_get_max_threads()}};
}

Index resolve_rank(const RunConfig& cfg, const Matrix& m) { return cfg.rank > 0 ? cfg.rank : numerical_rank(m); }

double parse_alpha(const std::string& text) {
  std::size_t used = 0;
  double a = 0.0;
  try {
    a = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || !(a >= 0.0 && a <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "--alpha must be a number in [0, 1] or 'auto', got '" + text + "'");
  }
  return a;
}

struct AlphaChoice {
  double alpha = 1.0;
  std::optional<double> upper;  // infeasible end of the bracket for "auto"
};

AlphaChoice choose_alpha(const RunConfig& cfg, const Matrix& m, const Matrix& b_star, double tol,
                         double slack_tol = 1e-9) {
  if (cfg.alpha != "auto") return {parse_alpha(cfg.alpha), std::nullopt};
  const AlphaSearch s = find_alpha_bar_info(m, b_star, tol, 60, slack_tol);
  return {s.alpha, s.alpha_hi};
}

std::pair<Index, Index> parse_shape(const std::string& shape, Index rows) {
  const auto x = shape.find('x');
  if (x == std::string::npos) throw Error(ErrorCode::InvalidArgument, "--pgm expects HxW, got '" + shape + "'");
  const Index h = std::stol(shape.substr(0, x));
  const Index w = std::stol(shape.substr(x + 1));
  if (h < 1 || w < 1 || h * w != rows) {
    throw Error(ErrorCode::InvalidArgument, "--pgm " + shape + " does not match " + std::to_string(rows) + " rows");
  }
  return {h, w};
}

void check_config(const RunConfig& cfg) {
  if (cfg.seeds < 1) throw Error(ErrorCode::InvalidArgument, "--seeds must be at least 1");
  if (cfg.max_outer < 1) throw Error(ErrorCode::InvalidArgument, "--max-outer must be at least 1");
  if (cfg.rank < 0) throw Error(ErrorCode::InvalidArgument, "--rank must be positive");
  for (double e : cfg.epsilons) {
    if (!(e >= 0.0 && e < 1.0)) throw Error(ErrorCode::InvalidArgument, "epsilon values must lie in [0, 1)");
  }
}

}  // namespace

Matrix load_input(const RunConfig& cfg, std::string* label) {
  if (!cfg.fixture.empty() && !cfg.input.empty()) {
    throw Error(ErrorCode::InvalidArgument, "give either --input or --fixture, not both");
  }
  Matrix m;
  if (!cfg.fixture.empty()) {
    m = load_fixture(cfg.fixture);
    if (label) *label = "fixture:" + cfg.fixture;
  } else if (!cfg.input.empty()) {
    m = cfg.format ? io::read_matrix(cfg.input, *cfg.format) : io::read_matrix(cfg.input);
    if (label) *label = cfg.input;
  } else {
    throw Error(ErrorCode::InvalidArgument, "no input: use --input FILE or --fixture NAME");
  }
  require_finite(m, "input matrix");
  return m;
}

void write_pgm(const std::filesystem::path& path, const Vector& column, Index h, Index w) {
  if (column.size() != h * w) throw Error(ErrorCode::InvalidArgument, "PGM shape does not match the column");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  const double top = column.maxCoeff();
  out << "P5\n" << w << ' ' << h << "\n255\n";
  for (Index i = 0; i < h; ++i) {
    for (Index j = 0; j < w; ++j) {
      const double v = top > 0.0 ? std::clamp(column(j * h + i) / top, 0.0, 1.0) : 0.0;
      out.put(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * v))));
    }
  }
}

json cmd_preprocess(const RunConfig& cfg) {
  check_config(cfg);
  std::string label;
  const Matrix m = load_input(cfg, &label);
  ensure_dir(cfg.out);
  json report = {{"environment", environment(cfg, "preprocess")},
                 {"input", {{"source", label}, {"rows", m.rows()}, {"cols", m.cols()}}},
                 {"records", json::array()}};
  for (double eps : cfg.epsilons) {
    PreprocessOptions po;
    po.epsilon = eps;
    po.allow_duplicates = cfg.allow_duplicates;
    po.alpha = 1.0;
    PreprocessResult res = preprocess(m, po);
    const AlphaChoice ac = choose_alpha(cfg, m, res.b_star, 1e-4);
    if (ac.alpha != 1.0) res.p_alpha_m = apply_alpha(m, res.b_star, ac.alpha);
    const std::string suffix = "eps" + tag(eps);
    const auto p_file = cfg.out / ("P_" + suffix + ".csv");
    const auto b_file = cfg.out / ("Bstar_" + suffix + ".csv");
    io::write_matrix(p_file, res.p_alpha_m);
    io::write_matrix(b_file, res.b_star);
    json dups = json::array();
    for (const auto& d : res.duplicates) dups.push_back({{"i", d.i}, {"j", d.j}, {"ratio", d.ratio}});
    json rec = {{"epsilon", eps},
                {"alpha", ac.alpha},
                {"alpha_upper", optional_number(ac.upper)},
                {"rho_Bstar", res.rho},
                {"rho_bracket", {res.rho_info.lower, res.rho_info.upper}},
                {"sparsity_input", sparsity(m, cfg.zero_tol)},
                {"sparsity_preprocessed", sparsity(res.p_alpha_m, cfg.zero_tol)},
                {"max_column_kkt", res.column_kkt.size() ? res.column_kkt.maxCoeff() : 0.0},
                {"duplicates", dups},
                {"ill_conditioned", res.rho >= 0.99},
                {"files", {{"P", p_file.filename().string()}, {"Bstar", b_file.filename().string()}}}};
    if (res.rho >= 0.99) {
      std::cerr << "warning: rho(B*) = " << res.rho << " at epsilon " << eps
                << "; Q = I - B* is close to singular\n";
    }
    report["records"].push_back(std::move(rec));
  }
  save_json(cfg.out / "preprocess.json", report);
  return report;
}

namespace {

json factor_files(const RunConfig& cfg, const std::string& stem, const PipelineRecord& rec) {
  const auto up = cfg.out / (stem + "_U.csv");
  const auto vp = cfg.out / (stem + "_V.csv");
  const auto ui = cfg.out / (stem + "_U_improved.csv");
  const auto vi = cfg.out / (stem + "_V_improved.csv");
  io::write_matrix(up, rec.plain.u);
  io::write_matrix(vp, rec.plain.v);
  io::write_matrix(ui, rec.improved.u);
  io::write_matrix(vi, rec.improved.v);
  json files = {{"u_plain", up.filename().string()},
                {"v_plain", vp.filename().string()},
                {"u_improved", ui.filename().string()},
                {"v_improved", vi.filename().string()}};
  if (!cfg.pgm_shape.empty()) {
    const auto [h, w] = parse_shape(cfg.pgm_shape, rec.plain.u.rows());
    json pgms = json::array();
    for (Index k = 0; k < rec.plain.u.cols(); ++k) {
      const auto p = cfg.out / (stem + "_U" + std::to_string(k) + ".pgm");
      write_pgm(p, rec.plain.u.col(k), h, w);
      pgms.push_back(p.filename().string());
    }
    files["pgm"] = pgms;
  }
  return files;
}

json record_json(const PipelineRecord& rec, Index r, json files) {
  return {{"method", method_name(rec.method)},
          {"epsilon", rec.method == Method::PreNmf ? json(rec.epsilon) : json(nullptr)},
          {"alpha", rec.method == Method::PreNmf ? json(rec.alpha) : json(nullptr)},
          {"rank", r},
          {"seed", rec.plain.seed},
          {"iterations", rec.plain.iterations},
          {"rel_error_plain", rec.plain.rel_error},
          {"rel_error_improved", rec.improved.rel_error},
          {"rel_error_vq", optional_number(rec.rel_error_vq)},
          {"s_U", rec.plain.s_u},
          {"s_V", rec.plain.s_v},
          {"s_U_improved", rec.improved.s_u},
          {"s_V_improved", rec.improved.s_v},
          {"rho_Bstar", optional_number(rec.rho)},
          {"mu", optional_number(rec.mu)},
          {"sparsity_gap", optional_number(rec.sparsity_gap)},
          {"rank_warning", rec.plain.rank_warning},
          {"wall_time", rec.wall_time},
          {"files", std::move(files)}};
}

}  // namespace

json cmd_factorize(const RunConfig& cfg) {
  check_config(cfg);
  std::string label;
  const Matrix m = load_input(cfg, &label);
  const Index r = resolve_rank(cfg, m);
  ensure_dir(cfg.out);

  PipelineOptions base;
  base.max_outer = cfg.max_outer;
  base.extra_iters = cfg.extra_iters;
  base.zero_tol = cfg.zero_tol;
  base.allow_duplicates = cfg.allow_duplicates;
  base.serial = cfg.serial;
  base.seeds.clear();
  for (int s = 0; s < cfg.seeds; ++s) base.seeds.push_back(static_cast<std::uint64_t>(s));

  std::vector<Method> methods;
  for (const auto& name : cfg.methods) methods.push_back(method_from_string(name));
  // Pre-NMF runs first so that sNMF can be matched to its sparsity.
  std::stable_sort(methods.begin(), methods.end(), [](Method a, Method b) {
    return (a == Method::PreNmf) > (b == Method::PreNmf);
  });
  methods.erase(std::unique(methods.begin(), methods.end()), methods.end());

  json report = {{"environment", environment(cfg, "factorize")},
                 {"input", {{"source", label}, {"rows", m.rows()}, {"cols", m.cols()}}},
                 {"records", json::array()}};
  if (r > std::min(m.rows(), m.cols())) report["warnings"].push_back("rank exceeds min(m, n)");

  std::vector<double> pre_sparsity;
  for (Method method : methods) {
    try {
      if (method == Method::PreNmf) {
        for (double eps : cfg.epsilons) {
          PipelineOptions opt = base;
          opt.method = method;
          opt.epsilon = eps;
          if (cfg.alpha == "auto") {
            opt.alpha = choose_alpha(cfg, m, preprocess_matrix(m, eps), 1e-4).alpha;
          } else {
            opt.alpha = parse_alpha(cfg.alpha);
          }
          const PipelineRecord rec = run_pipeline(m, r, opt);
          pre_sparsity.push_back(rec.plain.s_u);
          const std::string stem = "pre-nmf_eps" + tag(eps);
          report["records"].push_back(record_json(rec, r, factor_files(cfg, stem, rec)));
        }
      } else if (method == Method::Snmf) {
        std::vector<double> targets = pre_sparsity;
        if (targets.empty()) {
          if (!cfg.target_su) throw Error(ErrorCode::InvalidArgument, "snmf needs --target-su or a pre-nmf run");
          targets.push_back(*cfg.target_su);
        }
        for (std::size_t i = 0; i < targets.size(); ++i) {
          PipelineOptions opt = base;
          opt.method = method;
          opt.target_su = std::min(targets[i], 0.999);
          const PipelineRecord rec = run_pipeline(m, r, opt);
          const std::string stem = "snmf_target" + tag(targets[i]);
          json j = record_json(rec, r, factor_files(cfg, stem, rec));
          j["target_s_U"] = targets[i];
          report["records"].push_back(std::move(j));
        }
      } else {
        PipelineOptions opt = base;
        opt.method = method;
        const PipelineRecord rec = run_pipeline(m, r, opt);
        report["records"].push_back(record_json(rec, r, factor_files(cfg, "nmf", rec)));
      }
    } catch (const Error& e) {
      throw Error(e.code(), method_name(method) + ": " + e.detail());
    }
  }
  save_json(cfg.out / "report.json", report);
  return report;
}

json cmd_npp(const RunConfig& cfg) {
  check_config(cfg);
  std::string label;
  const Matrix m = load_input(cfg, &label);
  if (numerical_rank(m) != 3) {
    throw Error(ErrorCode::RankMismatch, "npp needs a rank-3 input, got rank " + std::to_string(numerical_rank(m)));
  }
  if (cfg.fk_steps < 1 || cfg.fk_samples < 2) throw Error(ErrorCode::InvalidArgument, "--fk and samples must be positive");
  ensure_dir(cfg.out);
  const double eps = cfg.epsilons.empty() ? 0.0 : cfg.epsilons.front();
  const Matrix b = preprocess_matrix(m, eps);
  // Tight bracket: the solution set is only finite at the boundary value itself.
  const AlphaChoice ac = choose_alpha(cfg, m, b, 1e-11, 0.0);
  const Matrix p = apply_alpha(m, b, ac.alpha);
  const npp::NppInstance inst = npp::build_npp(p);

  const int k = cfg.fk_steps;
  const auto fk_file = cfg.out / ("f" + std::to_string(k) + ".csv");
  std::vector<double> ts, fs;
  {
    std::ofstream out(fk_file);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + fk_file.string());
    out << "t,f\n" << std::setprecision(17);
    for (int i = 0; i < cfg.fk_samples; ++i) {
      const double t = static_cast<double>(i) / cfg.fk_samples;
      const double f = npp::fk(inst, t, k);
      ts.push_back(t);
      fs.push_back(f);
      out << t << ',' << f << '\n';
    }
  }
  // Shift table: max |f(t + s) - f(t) - s| over the samples that stay on the grid.
  json shifts = json::array();
  for (int den : {8, 4, 2}) {
    if (cfg.fk_samples % den) continue;
    const int step = cfg.fk_samples / den;
    double worst = 0.0;
    for (int i = 0; i < cfg.fk_samples; ++i) {
      const int j = (i + step) % cfg.fk_samples;
      const double wrap = i + step >= cfg.fk_samples ? 1.0 : 0.0;
      worst = std::max(worst, std::abs(fs[static_cast<std::size_t>(j)] + wrap - fs[static_cast<std::size_t>(i)] - 1.0 / den));
    }
    shifts.push_back({{"shift", 1.0 / den}, {"max_deviation", worst}});
  }

  const int min_k = npp::min_vertices(inst);
  const npp::Solutions sols = npp::enumerate_solutions(inst, min_k);
  const char* status = sols.status == npp::SolutionStatus::Finite      ? "finite"
                       : sols.status == npp::SolutionStatus::NotFinite ? "not finite"
                                                                        : "infeasible";
  json polys = json::array();
  for (std::size_t s = 0; s < sols.polygons.size(); ++s) {
    polys.push_back({{"start_t", sols.start_t[s]}, {"vertices", to_json(sols.polygons[s])}});
  }
  const auto cp = npp::contact_change_points(inst, k);
  json report = {{"environment", environment(cfg, "npp")},
                 {"input", {{"source", label}, {"rows", m.rows()}, {"cols", m.cols()}}},
                 {"epsilon", eps},
                 {"alpha", ac.alpha},
                 {"alpha_upper", optional_number(ac.upper)},
                 {"inner_vertices", inst.inner.size()},
                 {"outer_vertices", inst.outer.size()},
                 {"separable", inst.inner.size() == static_cast<std::size_t>(min_k)},
                 {"min_vertices", min_k},
                 {"status", status},
                 {"solution_count", sols.polygons.size()},
                 {"solutions", polys},
                 {"contact_classes", cp.classes},
                 {"fk", {{"steps", k}, {"samples", cfg.fk_samples}, {"file", fk_file.filename().string()}}},
                 {"shift_table", shifts}};
  save_json(cfg.out / "npp.json", report);
  return report;
}

json cmd_uniqueness(const RunConfig& cfg) {
  check_config(cfg);
  std::string label;
  const Matrix m = load_input(cfg, &label);
  const Index r = resolve_rank(cfg, m);
  ensure_dir(cfg.out);
  UniquenessReport rep = uniqueness_report(m, r, cfg.zero_tol);
  // Without a certificate, look at the supports of a computed factor instead.
  std::optional<double> fit_error;
  if (!rep.unique) {
    PipelineOptions opt;
    opt.max_outer = cfg.max_outer;
    opt.zero_tol = cfg.zero_tol;
    opt.seeds.clear();
    for (int s = 0; s < cfg.seeds; ++s) opt.seeds.push_back(static_cast<std::uint64_t>(s));
    opt.serial = cfg.serial;
    const PipelineRecord fit = run_pipeline(m, r, opt);
    rep.containment = support_containment(fit.plain.u, cfg.zero_tol);
    fit_error = fit.plain.rel_error;
  }
  json pairs = json::array();
  for (const auto& w : rep.containment) {
    pairs.push_back({{"k", w.k},
                     {"l", w.l},
                     {"p_bar", w.p_bar},
                     {"epsilon", w.epsilon},
                     {"verified", w.verified},
                     {"D", to_json(w.d)}});
  }
  json report = {{"environment", environment(cfg, "uniqueness")},
                 {"input", {{"source", label}, {"rows", m.rows()}, {"cols", m.cols()}}},
                 {"r", r},
                 {"rank", rep.rank},
                 {"vertex_columns", rep.vertex_columns},
                 {"certified_columns", rep.chosen},
                 {"unique", rep.unique},
                 {"verdict", rep.verdict()},
                 {"rank_plus_equals_rank",
                  rep.rank_plus_three ? json(*rep.rank_plus_three) : json("assumed")},
                 {"containment_source", fit_error ? "nmf factor U" : "certified columns"},
                 {"nmf_rel_error", optional_number(fit_error)},
                 {"containment_pairs", pairs}};
  save_json(cfg.out / "uniqueness.json", report);
  return report;
}

}  // namespace prenmf::cli

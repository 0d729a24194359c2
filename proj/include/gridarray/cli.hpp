#pragma once

// Command-line front end: bench, analyze, translate, run, glm. Lives in a header so the
// acceptance binary can run commands in-process.
//
// Config files are flat `key = value` lines ('#' comments); keys are the long flag names of
// the chosen subcommand. Flags given on the command line win. Every output starts with a
// provenance line naming the tool version, a hash of the effective options, and the seed.
// Exit codes: 0 success, 1 usage or input error, 2 invariant violation.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "gridarray/analysis.hpp"
#include "gridarray/apps.hpp"
#include "gridarray/lang.hpp"

namespace gridarray::cli {

inline constexpr const char* kVersion = "0.1.0";

struct usage_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---- small parsers ----

inline std::vector<Index> parse_dims(const std::string& s, const std::string& what) {
  std::vector<Index> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, 'x')) {
    Index v = 0;
    auto r = std::from_chars(part.data(), part.data() + part.size(), v);
    if (r.ec != std::errc() || r.ptr != part.data() + part.size() || v < 1)
      throw usage_error(what + ": expected positive integers joined by 'x', got '" + s + "'");
    out.push_back(v);
  }
  if (out.empty()) throw usage_error(what + " is empty");
  return out;
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ','))
    if (!part.empty()) out.push_back(part);
  return out;
}

inline std::vector<Index> parse_index_list(const std::string& s, const std::string& what) {
  std::vector<Index> out;
  for (const auto& p : split_list(s)) out.push_back(parse_dims(p, what).at(0));
  if (out.empty()) throw usage_error(what + " is empty");
  return out;
}

// key = value lines; '#' starts a comment.
inline std::vector<std::pair<std::string, std::string>> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw usage_error("cannot read config file " + path);
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  int no = 0;
  auto trim = [](std::string s) {
    auto b = s.find_first_not_of(" \t\r"), e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++no;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw usage_error(path + ":" + std::to_string(no) + ": expected key = value");
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

// ---- provenance ----

struct Provenance {
  std::string config_hash;
  std::uint64_t seed = 0;

  std::string line(const std::string& prefix) const {
    return prefix + " gridarray " + kVersion + " config=" + config_hash + " seed=" + std::to_string(seed) + "\n";
  }
  nlohmann::json json() const { return {{"tool", "gridarray"}, {"version", kVersion}, {"config", config_hash}, {"seed", seed}}; }
};

// Hash of the subcommand name and every option's effective value, in name order. The output
// directory is excluded: where files land does not change what is in them.
inline std::string config_hash(const CLI::App& sub) {
  std::map<std::string, std::string> kv;
  for (const CLI::Option* o : sub.get_options()) {
    const std::string& name = o->get_name();
    if (name == "--help" || name == "--config" || name == "--out") continue;
    auto res = o->results();
    std::string v;
    for (const auto& r : res) v += r + ";";
    kv[name] = res.empty() ? o->get_default_str() : v;
  }
  std::string canon = sub.get_name() + "\n";
  for (const auto& [k, v] : kv) canon += k + "=" + v + "\n";
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << lang::fnv1a(canon);
  return os.str();
}

inline std::ofstream open_out(const std::string& dir, const std::string& name, bool binary = false) {
  std::filesystem::create_directories(dir);
  std::ofstream f(std::filesystem::path(dir) / name, binary ? std::ios::binary : std::ios::out);
  if (!f) throw usage_error("cannot write " + (std::filesystem::path(dir) / name).string());
  return f;
}

// ---- option bundles ----

struct ClusterOpts {
  std::string nodes = "2x1";
  int workers = 2;
  CostParams params;

  void add(CLI::App* a) {
    a->add_option("--nodes", nodes, "node grid, e.g. 2x1")->capture_default_str();
    a->add_option("--workers", workers, "workers per node")->capture_default_str();
    a->add_option("--alpha", params.alpha, "inter-node latency")->capture_default_str();
    a->add_option("--beta", params.beta, "inter-node seconds per element")->capture_default_str();
    a->add_option("--alpha-prime", params.alpha_prime, "object store latency")->capture_default_str();
    a->add_option("--beta-prime", params.beta_prime, "object store seconds per element")->capture_default_str();
    a->add_option("--alpha-dprime", params.alpha_dprime, "worker-to-worker latency")->capture_default_str();
    a->add_option("--beta-dprime", params.beta_dprime, "worker-to-worker seconds per element")->capture_default_str();
    a->add_option("--gamma", params.gamma, "dispatch latency per task")->capture_default_str();
    a->add_option("--intranode-discount", params.intranode_discount, "factor on D(n)")->capture_default_str();
  }

  NodeGrid grid() const {
    if (workers < 1) throw usage_error("--workers must be >= 1");
    params.validate();
    return NodeGrid(parse_dims(nodes, "--nodes"), workers);
  }
};

inline CommMode parse_mode(const std::string& m) {
  if (m == "ray") return CommMode::ray;
  if (m == "dask") return CommMode::dask;
  throw usage_error("--mode must be ray or dask");
}

// ---- bench ----

struct BenchOpts {
  std::string op = "xty";
  Index n = 64, d = 8;
  std::string grid = "4x1";
  std::string schedulers = "lshs,rr";
  std::string creation = "layout";
  std::string mode = "dask";
  std::uint64_t seed = 0;
  std::string out = ".";
  ClusterOpts cluster;
};

// X and Y are n x d with the given grid; xy multiplies X by a d x n Y on the transposed grid.
inline GraphArray bench_graph(Context& ctx, const BenchOpts& o) {
  Grid g = parse_dims(o.grid, "--grid");
  if (g.size() != 2) throw usage_error("--grid needs two axes, e.g. 4x1");
  Shape s{o.n, o.d};
  auto x = ctx.random(s, g, 2 * o.seed + 1);
  if (o.op == "neg") return ew_unary(UnaryOp::neg, x);
  if (o.op == "sum") return sum_axis(x, 0);
  if (o.op == "xy") return matmul(x, ctx.random({o.d, o.n}, {g[1], g[0]}, 2 * o.seed + 2));
  auto y = ctx.random(s, g, 2 * o.seed + 2);
  if (o.op == "xty") return matmul(transpose(x), y);
  if (o.op == "xyt") return matmul(x, transpose(y));
  if (o.op == "add") return ew_binary(BinaryOp::add, x, y);
  throw usage_error("unknown --op " + o.op);
}

inline int cmd_bench(const BenchOpts& o, const Provenance& pv, std::ostream& out) {
  NodeGrid ng = o.cluster.grid();
  CommMode mode = parse_mode(o.mode);
  Creation creation;
  if (o.creation == "layout") creation = Creation::layout;
  else if (o.creation == "rr") creation = Creation::round_robin_workers;
  else throw usage_error("--creation must be layout or rr");
  auto scheds = split_list(o.schedulers);
  if (scheds.empty()) throw usage_error("--scheduler is empty");
  out << pv.line("#");
  for (const auto& name : scheds) {
    SchedulerKind k;
    try {
      k = parse_scheduler(name);
    } catch (const std::invalid_argument& e) {
      throw usage_error(e.what());
    }
    Context ctx(ng, creation);
    GraphArray a = bench_graph(ctx, o);
    RunInfo info;
    auto res = ctx.compute(std::vector<GraphArray>{a}, k, o.seed, &info);
    std::string tag = o.op + "_" + scheduler_name(k);
    {
      auto f = open_out(o.out, "trace_" + tag + ".csv");
      f << pv.line("#");
      write_trace_csv(f, info.trace);
    }
    {
      nlohmann::json j = {{"provenance", pv.json()}, {"steps", schedule_json(info.schedule)}};
      auto f = open_out(o.out, "schedule_" + tag + ".json");
      f << j.dump(1) << '\n';
    }
    {
      auto f = open_out(o.out, "result_" + tag + ".bin", true);
      write_binary(f, ctx.to_dense(res[0]));
    }
    auto recs = info.schedule.records();
    Index elems = internode_elements(recs), max_mem = 0;
    for (const auto& l : ctx.cluster().S) max_mem = std::max(max_mem, l.mem);
    out << "op=" << o.op << " scheduler=" << scheduler_name(k) << " creation=" << o.creation
        << " internode_elements=" << elems << " internode_bytes=" << elems * 8
        << " transfers=" << internode_transfers(recs) << " tasks=" << recs.size()
        << " comm_time=" << std::setprecision(12) << comm_time(recs, o.cluster.params, mode)
        << " max_mem=" << max_mem << '\n';
  }
  return 0;
}

// ---- analyze ----

struct AnalyzeOpts {
  std::string ops = "unary,binary,reduce,inner,outer,matmul";
  std::string k = "1,4,16";
  std::string r = "1,4";
  Index n = 16;
  std::string mode = "ray";  // the stated reduce and inner bounds carry R(n) store terms
  std::string scheduler = "lshs";
  std::uint64_t seed = 0;
  bool summa = false;
  std::string out = ".";
  CostParams params;
};

inline bool is_square(Index v) {
  auto s = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(v))));
  return s * s == v;
}

// Outer and matmul need square k and p; n must be a square block size. Other pairs skip.
inline int cmd_analyze(const AnalyzeOpts& o, const Provenance& pv, std::ostream& out) {
  CommMode mode = parse_mode(o.mode);
  o.params.validate();
  if (!is_square(o.n)) throw usage_error("--n must be a perfect square (blocks are b x b)");
  SchedulerKind sk;
  try {
    sk = parse_scheduler(o.scheduler);
  } catch (const std::invalid_argument& e) {
    throw usage_error(e.what());
  }
  std::vector<CompareRow> rows;
  for (const auto& name : split_list(o.ops)) {
    Family fam;
    try {
      fam = parse_family(name);
    } catch (const std::invalid_argument& e) {
      throw usage_error(e.what());
    }
    for (Index k : parse_index_list(o.k, "--k"))
      for (Index r : parse_index_list(o.r, "--r")) {
        bool square = fam == Family::outer || fam == Family::matmul;
        if (square && (!is_square(k) || !is_square(k * r))) continue;
        OpProfile f = OpProfile::of(k, r, o.n, o.params);
        SimResult s = simulate(fam, f, mode, sk, o.seed);
        rows.push_back(compare(name, fam, f, s.seconds, mode));
      }
  }
  {
    auto f = open_out(o.out, "analysis.csv");
    f << pv.line("#");
    write_compare_csv(f, rows);
  }
  out << pv.line("#");
  write_compare_csv(out, rows);
  bool violated = false;
  for (const auto& r : rows) {
    if (!r.below_bound) continue;
    violated = true;
    out << "violation: " << r.op << " k=" << r.k << " r=" << r.r << " simulated " << r.sim_s << " < bound "
        << r.bound_s << '\n';
  }
  if (o.summa) {
    auto f = open_out(o.out, "summa.csv");
    f << pv.line("#");
    std::ostringstream body;
    body << "k,r,n,summa_s,lb_matmul_s,ratio\n" << std::setprecision(12);
    for (Index k : parse_index_list(o.k, "--k"))
      for (Index r : parse_index_list(o.r, "--r")) {
        OpProfile p = OpProfile::of(k, r, o.n, o.params);
        double s = summa_cost(p), b = lb_matmul(p);
        body << k << ',' << r << ',' << o.n << ',' << s << ',' << b << ',' << s / b << '\n';
      }
    f << body.str();
    out << body.str();
  }
  return violated ? 2 : 0;
}

// ---- translate and run ----

inline std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw usage_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline int cmd_translate(const std::string& file, const Provenance& pv, std::ostream& out) {
  auto p = lang::parse(read_text(file));
  out << pv.line("//") << lang::to_string(lang::translate(p)) << '\n';
  return 0;
}

struct RunOpts {
  std::string file;
  int workers = 1;
  std::uint64_t seed = 0;
  std::int64_t fuel = 100000;
  std::string mode = "both";
  std::string out = ".";
};

inline std::string csv_quote(const std::string& s) {
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

inline int cmd_run(const RunOpts& o, const Provenance& pv, std::ostream& out) {
  if (o.mode != "serial" && o.mode != "futures" && o.mode != "both")
    throw usage_error("--mode must be serial, futures or both");
  if (o.workers < 1) throw usage_error("--workers must be >= 1");
  if (o.fuel < 1) throw usage_error("--fuel must be >= 1");
  auto prog = lang::parse(read_text(o.file));
  lang::FuturesOptions fo;
  fo.workers = o.workers;
  fo.seed = o.seed;
  fo.limits.fuel = o.fuel;
  out << pv.line("#");
  std::ostringstream csv;
  csv << "world,variable,value\n";
  int code = 0;
  lang::SerialState serial;
  if (o.mode != "futures") {
    serial = lang::eval_serial(prog, fo.limits);
    if (serial.bottom) {
      out << "serial: bottom (" << serial.reason << ")\n";
      csv << "serial,,bottom\n";
    } else {
      out << "serial:";
      for (const auto& [x, v] : serial.vars) {
        out << ' ' << x << '=' << lang::to_string(v);
        csv << "serial," << x << ',' << csv_quote(lang::to_string(v)) << '\n';
      }
      out << '\n';
    }
  }
  if (o.mode != "serial") {
    auto fut = lang::eval_futures(lang::translate(prog), fo);
    if (fut.deadlock) {
      out << "futures: deadlock (" << fut.reason << ")\n";
      code = 2;
    } else if (fut.bottom) {
      out << "futures: bottom (" << fut.reason << ")" << (fut.mu_bottom ? " store=bottom" : "") << '\n';
      csv << "futures,,bottom\n";
    } else {
      out << "futures:";
      for (const auto& [x, v] : fut.sigma) {
        std::string shown = lang::to_string(v);
        if (v.k == lang::VK::Oid && fut.mu.count(v.oid)) shown += " -> " + lang::to_string(fut.mu.at(v.oid));
        out << ' ' << x << '=' << shown;
        csv << "futures," << x << ',' << csv_quote(shown) << '\n';
      }
      out << "\nstore: " << fut.mu.size() << " objects";
    }
    out << " transitions=" << fut.transitions << " store_violations=" << fut.store_violations
        << " channel_violations=" << fut.channel_violations << '\n';
    if (fut.store_violations || fut.channel_violations) code = 2;
    if (o.mode == "both") {
      bool eq = lang::check_equivalence(serial, fut);
      out << "equivalent: " << (eq ? "yes" : "no") << '\n';
      if (!eq) code = 2;
    }
  }
  auto f = open_out(o.out, "run.csv");
  f << pv.line("#") << csv.str();
  return code;
}

// ---- glm ----

struct GlmOpts {
  std::string data = "synth:10000,8,0";
  Index row_blocks = 8;
  bool no_intercept = false;
  double eps = 1e-6;
  int max_iter = 50;
  std::string scheduler = "lshs";
  std::uint64_t seed = 0;
  std::string out = ".";
  ClusterOpts cluster{"4x1", 2, {}};
};

inline Dataset load_dataset(const std::string& source) {
  if (source.rfind("synth:", 0) == 0) {
    auto parts = split_list(source.substr(6));
    if (parts.size() != 3) throw usage_error("--data synth:n,d,seed");
    Index n = parse_dims(parts[0], "synth n")[0], d = parse_dims(parts[1], "synth d")[0];
    std::uint64_t s = 0;
    auto r = std::from_chars(parts[2].data(), parts[2].data() + parts[2].size(), s);
    if (r.ec != std::errc()) throw usage_error("synth seed must be a non-negative integer");
    return synth_bimodal(n, d, s);
  }
  std::string path = source.rfind("csv:", 0) == 0 ? source.substr(4) : source;
  return split_label(read_csv_dense(path));
}

inline int cmd_glm(const GlmOpts& o, const Provenance& pv, std::ostream& out) {
  NodeGrid ng = o.cluster.grid();
  SchedulerKind sk;
  try {
    sk = parse_scheduler(o.scheduler);
  } catch (const std::invalid_argument& e) {
    throw usage_error(e.what());
  }
  if (o.row_blocks < 1) throw usage_error("--row-blocks must be >= 1");
  Dataset ds = load_dataset(o.data);
  Tensor X = o.no_intercept ? ds.X : with_intercept(ds.X);
  Context ctx(ng);
  GlmProblem p{ctx.from_dense(X, {o.row_blocks, 1}), ctx.from_dense(ds.y, {o.row_blocks}), o.eps, o.max_iter};
  auto res = newton(ctx, p, {sk, o.seed});
  out << pv.line("#");
  std::ostringstream csv;
  csv << "iteration,grad_norm,internode_elements,internode_bytes,transfers,damped\n" << std::setprecision(17);
  out << std::setprecision(6);
  for (std::size_t i = 0; i < res.history.size(); ++i) {
    const auto& h = res.history[i];
    out << "iter=" << i << " grad_norm=" << h.grad_norm << " internode_bytes=" << h.internode_elements * 8
        << " transfers=" << h.internode_transfers << (h.damped ? " damped" : "") << '\n';
    csv << i << ',' << h.grad_norm << ',' << h.internode_elements << ',' << h.internode_elements * 8 << ','
        << h.internode_transfers << ',' << (h.damped ? 1 : 0) << '\n';
  }
  double acc = accuracy(X, ds.y, res.beta);
  out << "iterations=" << res.iterations << " converged=" << (res.converged ? "yes" : "no")
      << " grad_norm=" << res.grad_norm << " accuracy=" << acc << '\n';
  {
    auto f = open_out(o.out, "glm_iterations.csv");
    f << pv.line("#") << csv.str();
  }
  {
    auto f = open_out(o.out, "glm_trace.csv");
    f << pv.line("#");
    write_trace_csv(f, res.trace);
  }
  {
    auto f = open_out(o.out, "glm_beta.bin", true);
    write_binary(f, res.beta);
  }
  return 0;
}

// ---- entry point ----

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Block-partitioned array engine with a simulated cluster, plus a futures mini-language."};
  app.set_version_flag("--version", std::string(kVersion));
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  std::string config;

  BenchOpts bo;
  auto* bench = app.add_subcommand("bench", "schedule, execute and trace one array operation");
  bench->add_option("--op", bo.op, "xty, xyt, xy, add, neg or sum")->capture_default_str();
  bench->add_option("--n", bo.n, "rows")->capture_default_str();
  bench->add_option("--d", bo.d, "columns")->capture_default_str();
  bench->add_option("--grid", bo.grid, "array grid, e.g. 4x1")->capture_default_str();
  bench->add_option("--scheduler", bo.schedulers, "comma list of lshs, rr, random")->capture_default_str();
  bench->add_option("--creation", bo.creation, "layout or rr (round-robin over workers)")->capture_default_str();
  bench->add_option("--mode", bo.mode, "ray or dask cost accounting")->capture_default_str();
  bench->add_option("--seed", bo.seed, "data and scheduler seed")->capture_default_str();
  bench->add_option("--out", bo.out, "output directory")->capture_default_str();
  bo.cluster.add(bench);

  AnalyzeOpts ao;
  auto* analyze = app.add_subcommand("analyze", "simulated communication time against the lower bounds");
  analyze->add_option("--op", ao.ops, "comma list of unary, binary, reduce, inner, outer, matmul")->capture_default_str();
  analyze->add_option("--k", ao.k, "comma list of node counts")->capture_default_str();
  analyze->add_option("--r", ao.r, "comma list of blocks per node")->capture_default_str();
  analyze->add_option("--n", ao.n, "elements per block (a square)")->capture_default_str();
  analyze->add_option("--mode", ao.mode, "ray or dask")->capture_default_str();
  analyze->add_option("--scheduler", ao.scheduler, "lshs, rr or random")->capture_default_str();
  analyze->add_option("--seed", ao.seed, "scheduler seed")->capture_default_str();
  analyze->add_flag("--summa", ao.summa, "also tabulate the SUMMA to matmul-bound ratio");
  analyze->add_option("--out", ao.out, "output directory")->capture_default_str();
  analyze->add_option("--alpha", ao.params.alpha)->capture_default_str();
  analyze->add_option("--beta", ao.params.beta)->capture_default_str();
  analyze->add_option("--alpha-prime", ao.params.alpha_prime)->capture_default_str();
  analyze->add_option("--beta-prime", ao.params.beta_prime)->capture_default_str();
  analyze->add_option("--alpha-dprime", ao.params.alpha_dprime)->capture_default_str();
  analyze->add_option("--beta-dprime", ao.params.beta_dprime)->capture_default_str();
  analyze->add_option("--gamma", ao.params.gamma)->capture_default_str();
  analyze->add_option("--intranode-discount", ao.params.intranode_discount)->capture_default_str();

  std::string tfile;
  auto* translate = app.add_subcommand("translate", "print the futures translation of a program");
  translate->add_option("file", tfile, "program source")->required();

  RunOpts ro;
  auto* run = app.add_subcommand("run", "run a program serially, in the futures world, or both");
  run->add_option("file", ro.file, "program source")->required();
  run->add_option("--workers", ro.workers, "worker processes k")->capture_default_str();
  run->add_option("--seed", ro.seed, "interleaving seed")->capture_default_str();
  run->add_option("--fuel", ro.fuel, "loop iteration and call depth bound")->capture_default_str();
  run->add_option("--mode", ro.mode, "serial, futures or both")->capture_default_str();
  run->add_option("--out", ro.out, "output directory")->capture_default_str();

  GlmOpts go;
  auto* glm = app.add_subcommand("glm", "logistic regression by Newton's method");
  glm->add_option("--data", go.data, "csv:PATH, PATH, or synth:n,d,seed; last csv column is the label")->capture_default_str();
  glm->add_option("--row-blocks", go.row_blocks, "row blocks of X")->capture_default_str();
  glm->add_flag("--no-intercept", go.no_intercept, "do not prepend a column of ones");
  glm->add_option("--eps", go.eps, "gradient norm tolerance")->capture_default_str();
  glm->add_option("--max-iter", go.max_iter, "maximum Newton updates")->capture_default_str();
  glm->add_option("--scheduler", go.scheduler, "lshs, rr or random")->capture_default_str();
  glm->add_option("--seed", go.seed, "scheduler seed")->capture_default_str();
  glm->add_option("--out", go.out, "output directory")->capture_default_str();
  go.cluster.add(glm);

  for (auto* sub : {bench, analyze, translate, run, glm})
    sub->add_option("--config", config, "flat key = value file; flags win");

  // Config entries become flags placed before the user's own, so the user's take precedence.
  std::vector<std::string> argv = args;
  try {
    for (std::size_t i = 0; i + 1 < args.size(); ++i) {
      if (args[i] != "--config") continue;
      auto it = std::find_if(argv.begin(), argv.end(), [&](const std::string& a) {
        return a == "bench" || a == "analyze" || a == "translate" || a == "run" || a == "glm";
      });
      std::vector<std::string> injected;
      for (const auto& [k, v] : read_config(args[i + 1])) {
        if (k == "config") throw usage_error("config files cannot include other config files");
        injected.push_back("--" + k + "=" + v);
      }
      if (it != argv.end()) argv.insert(it + 1, injected.begin(), injected.end());
    }
    std::vector<std::string> rev(argv.rbegin(), argv.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const usage_error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    for (auto* sub : app.get_subcommands()) {
      std::uint64_t seed = 0;
      if (sub == bench) seed = bo.seed;
      if (sub == analyze) seed = ao.seed;
      if (sub == run) seed = ro.seed;
      if (sub == glm) seed = go.seed;
      Provenance pv{config_hash(*sub), seed};
      if (sub == bench) return cmd_bench(bo, pv, out);
      if (sub == analyze) return cmd_analyze(ao, pv, out);
      if (sub == translate) return cmd_translate(tfile, pv, out);
      if (sub == run) return cmd_run(ro, pv, out);
      if (sub == glm) return cmd_glm(go, pv, out);
    }
  } catch (const usage_error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const lang::syntax_error& e) {
    err << "syntax error: " << e.what() << '\n';
    return 1;
  } catch (const csv_error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "invariant violation: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace gridarray::cli

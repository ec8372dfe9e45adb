// Command-line front end: classify, count, sample and approximate database
// repairs from plain-text schema/facts/query files.

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "repcount/repcount.hpp"

namespace {

using nlohmann::json;
using namespace repcount;

struct FileError : Error {
  using Error::Error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileError("cannot write " + path);
  out << text;
}

std::uint64_t fnv1a(const std::string& data, std::uint64_t h = 1469598103934665603ULL) {
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << v;
  return os.str();
}

ExactRatio parse_ratio(const std::string& text) {
  auto slash = text.find('/');
  try {
    if (slash != std::string::npos) {
      BigCount num(text.substr(0, slash));
      BigCount den(text.substr(slash + 1));
      if (den == 0) throw Error("zero denominator");
      return ExactRatio(num, den);
    }
    auto dot = text.find('.');
    if (dot == std::string::npos) return ExactRatio(BigCount(text));
    std::string digits = text.substr(0, dot) + text.substr(dot + 1);
    BigCount num(digits);
    BigCount den = 1;
    for (std::size_t i = dot + 1; i < text.size(); ++i) den *= 10;
    return ExactRatio(num, den);
  } catch (const std::exception&) {
    throw FileError("cannot parse number '" + text + "'");
  }
}

// Inputs shared by the engine subcommands.
struct Inputs {
  std::string schema_path, facts_path, query_path, answer;
  std::uint64_t seed = 0;
  std::size_t oracle_cap = 25;
  bool json_out = false;

  std::string digest_material;

  SchemaAndFds schema_fds() {
    std::string text = read_file(schema_path);
    digest_material += text;
    return parse_schema_fds(text);
  }

  Database facts(const Schema& schema) {
    std::string text = read_file(facts_path);
    digest_material += text;
    return parse_facts(text, schema);
  }

  ConjunctiveQuery query(const Schema& schema) {
    std::string text = read_file(query_path);
    digest_material += text;
    ParsedQuery parsed = parse_query(text, schema);
    if (parsed.boolean()) {
      if (!answer.empty())
        throw FileError("--answer given but the query has no answer variables");
      return parsed.body;
    }
    if (answer.empty())
      throw FileError("query has " + std::to_string(parsed.answer_variables.size()) +
                      " answer variables; ground it with --answer v1,v2,...");
    digest_material += answer;
    try {
      return ground_query(parsed, parse_answer_tuple(answer));
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw FileError(e.what());
    }
  }

  std::string digest() const { return hex64(fnv1a(digest_material)); }
};

void add_common(CLI::App* cmd, Inputs& in, bool facts, bool query) {
  cmd->add_option("--schema", in.schema_path, "schema and FD file")->required();
  if (facts) cmd->add_option("--facts", in.facts_path, "facts file")->required();
  if (query) {
    cmd->add_option("--query", in.query_path, "query file")->required();
    cmd->add_option("--answer", in.answer, "answer tuple v1,v2,... for a non-Boolean query");
  }
  cmd->add_option("--seed", in.seed, "random seed");
  cmd->add_option("--oracle-cap", in.oracle_cap, "fact cap for the brute-force oracle");
  cmd->add_flag("--json", in.json_out, "emit a JSON record");
}

void emit(const Inputs& in, const std::string& command, const json& result, bool exact,
          const std::string& human) {
  if (in.json_out) {
    json record = {{"command", command},
                   {"inputs-digest", in.digest()},
                   {"result", result},
                   {"exact", exact}};
    std::cout << record.dump(2) << "\n";
  } else {
    std::cout << human;
  }
}

std::string ratio_line(const ExactRatio& r) {
  std::ostringstream os;
  os << ratio_numer(r) << "/" << ratio_denom(r) << "  (approximately " << decimal_approx(r)
     << ")";
  return os.str();
}

json trace_json(const std::vector<SafetyStep>& trace) {
  json arr = json::array();
  for (const auto& step : trace) arr.push_back({{"rule", step.rule}, {"detail", step.detail}});
  return arr;
}

int run(int argc, char** argv) {
  CLI::App app{"repcount: counting, sampling and approximating database repairs"};
  app.require_subcommand(1);

  Inputs in;

  auto* cmd_classify = app.add_subcommand("classify", "FP / #P-complete dichotomy for (FDs, query)");
  add_common(cmd_classify, in, false, true);

  auto* cmd_count_repairs = app.add_subcommand("count-repairs", "exact number of repairs");
  add_common(cmd_count_repairs, in, true, false);

  auto* cmd_count = app.add_subcommand("count", "exact number of repairs entailing the query");
  add_common(cmd_count, in, true, true);

  auto* cmd_rfreq = app.add_subcommand("rfreq", "exact relative frequency of the query");
  add_common(cmd_rfreq, in, true, true);

  auto* cmd_sample = app.add_subcommand("sample", "uniform repair samples");
  std::size_t sample_count = 1;
  std::string conditional;
  add_common(cmd_sample, in, true, false);
  cmd_sample->add_option("--count", sample_count, "number of samples");
  cmd_sample->add_option("--given", conditional,
                         "file of facts every sampled repair must contain");

  auto* cmd_approx = app.add_subcommand("approx", "randomized (eps,delta)-approximate count");
  std::string eps_text = "1/5", delta_text = "1/20";
  add_common(cmd_approx, in, true, true);
  cmd_approx->add_option("--eps", eps_text, "relative error bound (rational or decimal)");
  cmd_approx->add_option("--delta", delta_text, "failure probability (rational or decimal)");

  auto* cmd_mc = app.add_subcommand("mc", "naive Monte-Carlo estimate (baseline)");
  std::uint64_t mc_samples = 10000;
  add_common(cmd_mc, in, true, true);
  cmd_mc->add_option("--samples", mc_samples, "number of uniform repair samples");

  auto* cmd_oracle = app.add_subcommand("oracle", "brute-force repair enumeration (capped)");
  bool oracle_list = false;
  add_common(cmd_oracle, in, true, false);
  cmd_oracle->add_option("--query", in.query_path, "optional query to count entailing repairs");
  cmd_oracle->add_option("--answer", in.answer, "answer tuple for a non-Boolean query");
  cmd_oracle->add_flag("--list", oracle_list, "print every repair");

  auto* cmd_gen = app.add_subcommand("gen", "instance generators");
  cmd_gen->require_subcommand(1);
  auto* cmd_gen_gap = cmd_gen->add_subcommand("gap3sat", "hard gadget from a DIMACS 3CNF");
  std::string cnf_path, out_schema, out_facts, out_query;
  int gap_k = 1;
  bool gen_json = false;
  cmd_gen_gap->add_option("--cnf", cnf_path, "DIMACS file with 3-literal clauses")->required();
  cmd_gen_gap->add_option("--k", gap_k, "growing factor")->required();
  cmd_gen_gap->add_option("--out-schema", out_schema, "write schema/FDs here");
  cmd_gen_gap->add_option("--out-facts", out_facts, "write facts here");
  cmd_gen_gap->add_flag("--json", gen_json, "emit a JSON record");
  auto* cmd_gen_rfreq = cmd_gen->add_subcommand("rfreq", "low-frequency family member");
  int rfreq_n = 1;
  cmd_gen_rfreq->add_option("--n", rfreq_n, "family index (2n+1 facts)")->required();
  cmd_gen_rfreq->add_option("--out-schema", out_schema, "write schema/FDs here");
  cmd_gen_rfreq->add_option("--out-facts", out_facts, "write facts here");
  cmd_gen_rfreq->add_option("--out-query", out_query, "write the query here");
  cmd_gen_rfreq->add_flag("--json", gen_json, "emit a JSON record");

  auto* cmd_reduce = app.add_subcommand(
      "reduce", "rewrite (D, Sigma, Q) so that #rep(D) = #rep(D', Q') (query-count reduction)");
  add_common(cmd_reduce, in, true, true);
  cmd_reduce->add_option("--out-facts", out_facts, "write the extended facts here");
  cmd_reduce->add_option("--out-query", out_query, "write the grounded query here");

  CLI11_PARSE(app, argc, argv);

  if (*cmd_classify) {
    SchemaAndFds sf = in.schema_fds();
    ConjunctiveQuery q = in.query(sf.schema);
    SafetyVerdict v = classify(sf.schema, sf.sigma, q);
    std::ostringstream os;
    os << "complexity: " << to_string(v.complexity) << "\n"
       << "lhs-chain: " << (v.chain_ok ? "yes" : "no") << "\n"
       << "safe: " << (v.safe ? "yes" : "no") << "\n"
       << "trace:\n";
    for (const auto& step : v.trace)
      os << "  - " << step.rule << (step.detail.empty() ? "" : " (" + step.detail + ")") << "\n";
    emit(in, "classify",
         {{"complexity", to_string(v.complexity)},
          {"lhs_chain", v.chain_ok},
          {"safe", v.safe},
          {"trace", trace_json(v.trace)}},
         true, os.str());
    return 0;
  }

  if (*cmd_count_repairs) {
    SchemaAndFds sf = in.schema_fds();
    Database d = in.facts(sf.schema);
    BigCount n = count_repairs(d, sf.sigma);
    emit(in, "count-repairs", {{"count", n.str()}}, true, "repairs: " + n.str() + "\n");
    return 0;
  }

  if (*cmd_count) {
    SchemaAndFds sf = in.schema_fds();
    Database d = in.facts(sf.schema);
    ConjunctiveQuery q = in.query(sf.schema);
    BigCount n = count_entailing(d, sf.sigma, q);
    emit(in, "count", {{"count", n.str()}}, true, "repairs entailing the query: " + n.str() + "\n");
    return 0;
  }

  if (*cmd_rfreq) {
    SchemaAndFds sf = in.schema_fds();
    Database d = in.facts(sf.schema);
    ConjunctiveQuery q = in.query(sf.schema);
    ExactRatio r = rel_freq(d, sf.sigma, q);
    emit(in, "rfreq",
         {{"numerator", ratio_numer(r).str()},
          {"denominator", ratio_denom(r).str()},
          {"decimal", decimal_approx(r)}},
         true, "relative frequency: " + ratio_line(r) + "\n");
    return 0;
  }

  if (*cmd_sample) {
    SchemaAndFds sf = in.schema_fds();
    Database d = in.facts(sf.schema);
    Rng rng(in.seed);
    std::vector<Fact> given;
    if (!conditional.empty()) {
      std::string text = read_file(conditional);
      in.digest_material += text;
      given = parse_facts(text, sf.schema).facts();
    }
    json arr = json::array();
    std::ostringstream os;
    for (std::size_t i = 0; i < sample_count; ++i) {
      Database rep = given.empty() ? sample_repair(d, sf.sigma, rng)
                                   : sample_conditional(d, sf.sigma, given, rng);
      json facts = json::array();
      os << "sample " << (i + 1) << ":\n";
      for (const Fact& f : rep.facts()) {
        os << "  " << print_fact(f) << "\n";
        facts.push_back(print_fact(f));
      }
      arr.push_back(facts);
    }
    emit(in, "sample", {{"samples", arr}}, false, os.str());
    return 0;
  }

  if (*cmd_approx) {
    SchemaAndFds sf = in.schema_fds();
    Database d = in.facts(sf.schema);
    ConjunctiveQuery q = in.query(sf.schema);
    ApproxParams params;
    params.epsilon = parse_ratio(eps_text);
    params.delta = parse_ratio(delta_text);
    params.seed = in.seed;
    ApproxResult res = karp_luby_count(d, sf.sigma, q, params);
    std::ostringstream os;
    os << "estimate: " << res.estimate.str() << "\n"
       << "raw: " << ratio_line(res.raw) << "\n"
       << "homomorphic images: " << res.num_images << ", trials: " << res.num_trials << "\n";
    emit(in, "approx",
         {{"estimate", res.estimate.str()},
          {"raw_numerator", ratio_numer(res.raw).str()},
          {"raw_denominator", ratio_denom(res.raw).str()},
          {"images", res.num_images},
          {"trials", res.num_trials}},
         false, os.str());
    return 0;
  }

  if (*cmd_mc) {
    SchemaAndFds sf = in.schema_fds();
    Database d = in.facts(sf.schema);
    ConjunctiveQuery q = in.query(sf.schema);
    Rng rng(in.seed);
    MonteCarloResult res = monte_carlo_count(d, sf.sigma, q, mc_samples, rng);
    std::ostringstream os;
    os << "estimate: " << res.estimate.str() << "\n"
       << "raw: " << ratio_line(res.raw) << "\n"
       << "entailing samples: " << res.entailing_samples << " of " << mc_samples << "\n";
    emit(in, "mc",
         {{"estimate", res.estimate.str()},
          {"raw_numerator", ratio_numer(res.raw).str()},
          {"raw_denominator", ratio_denom(res.raw).str()},
          {"entailing_samples", res.entailing_samples},
          {"samples", mc_samples}},
         false, os.str());
    return 0;
  }

  if (*cmd_oracle) {
    SchemaAndFds sf = in.schema_fds();
    Database d = in.facts(sf.schema);
    OracleOptions opts{in.oracle_cap};
    std::vector<Database> reps = enumerate_repairs(d, sf.sigma, opts);
    std::optional<BigCount> entailing;
    if (!in.query_path.empty()) {
      ConjunctiveQuery q = in.query(sf.schema);
      BigCount n = 0;
      for (const Database& rep : reps)
        if (entails(rep, q)) ++n;
      entailing = n;
    }
    std::ostringstream os;
    os << "repairs: " << reps.size() << "\n";
    if (entailing) os << "repairs entailing the query: " << entailing->str() << "\n";
    json result = {{"repairs", std::to_string(reps.size())}};
    if (entailing) result["entailing"] = entailing->str();
    if (oracle_list) {
      json arr = json::array();
      for (const Database& rep : reps) {
        json facts = json::array();
        os << "repair:\n";
        for (const Fact& f : rep.facts()) {
          os << "  " << print_fact(f) << "\n";
          facts.push_back(print_fact(f));
        }
        arr.push_back(facts);
      }
      result["list"] = arr;
    }
    emit(in, "oracle", result, true, os.str());
    return 0;
  }

  if (*cmd_gen_gap) {
    std::string text = read_file(cnf_path);
    Cnf3 cnf = parse_dimacs3(text);
    GapInstance inst = gen_gap3sat(cnf, gap_k);
    std::string schema_text = print_schema_fds(inst.db.schema(), inst.sigma);
    std::string facts_text = print_facts(inst.db);
    if (!out_schema.empty()) write_file(out_schema, schema_text);
    if (!out_facts.empty()) write_file(out_facts, facts_text);
    if (gen_json) {
      json record = {{"command", "gen gap3sat"},
                     {"inputs-digest", hex64(fnv1a(text))},
                     {"result", {{"facts", inst.db.size()}, {"k", gap_k}}},
                     {"exact", true}};
      std::cout << record.dump(2) << "\n";
    } else if (out_schema.empty() && out_facts.empty()) {
      std::cout << schema_text << "\n" << facts_text;
    } else {
      std::cout << "wrote " << inst.db.size() << " facts\n";
    }
    return 0;
  }

  if (*cmd_gen_rfreq) {
    RfreqInstance inst = gen_rfreq_family(rfreq_n);
    std::string schema_text = print_schema_fds(inst.db.schema(), inst.sigma);
    std::string facts_text = print_facts(inst.db);
    std::string query_text = print_query(inst.query) + "\n";
    if (!out_schema.empty()) write_file(out_schema, schema_text);
    if (!out_facts.empty()) write_file(out_facts, facts_text);
    if (!out_query.empty()) write_file(out_query, query_text);
    if (gen_json) {
      json record = {{"command", "gen rfreq"},
                     {"inputs-digest", hex64(fnv1a(std::to_string(rfreq_n)))},
                     {"result", {{"facts", inst.db.size()}, {"n", rfreq_n}}},
                     {"exact", true}};
      std::cout << record.dump(2) << "\n";
    } else if (out_schema.empty() && out_facts.empty() && out_query.empty()) {
      std::cout << schema_text << "\n" << facts_text << "\n" << query_text;
    } else {
      std::cout << "wrote " << inst.db.size() << " facts\n";
    }
    return 0;
  }

  if (*cmd_reduce) {
    SchemaAndFds sf = in.schema_fds();
    Database d = in.facts(sf.schema);
    std::string text = read_file(in.query_path);
    in.digest_material += text;
    ParsedQuery parsed = parse_query(text, sf.schema);
    CookReduction red = cook_reduce(d, sf.sigma, parsed.body);
    std::string facts_text = print_facts(red.db);
    std::string query_text = print_query(red.grounded) + "\n";
    if (!out_facts.empty()) write_file(out_facts, facts_text);
    if (!out_query.empty()) write_file(out_query, query_text);
    std::ostringstream os;
    std::vector<std::string> tuple;
    for (const auto& v : parsed.answer_variables) tuple.push_back(red.assignment.at(v));
    os << "tuple:";
    for (const auto& v : tuple) os << " " << v;
    os << "\nrenamed: " << (red.renamed ? "yes" : "no") << "\n";
    if (out_facts.empty()) os << facts_text;
    if (out_query.empty()) os << query_text;
    emit(in, "reduce",
         {{"tuple", tuple}, {"renamed", red.renamed}, {"facts", red.db.size()}},
         true, os.str());
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const repcount::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const FileError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const repcount::OracleCapError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const repcount::PreconditionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

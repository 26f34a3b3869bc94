#include "lethe/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "lethe/conflict.hpp"
#include "lethe/engine.hpp"
#include "lethe/error.hpp"
#include "lethe/service.hpp"
#include "lethe/snapshot.hpp"
#include "lethe/synthetic.hpp"

namespace lethe {
namespace {

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::StorageFailure:
    case Errc::ChainCorrupt:
    case Errc::ConflictUnresolved:
    case Errc::NotConverged:
    case Errc::NoProgress:
    case Errc::DegenerateStep:
      return kExitRuntime;
    default:
      return kExitValidation;
  }
}

std::string env_or(const char* name, std::string fallback) {
  const char* value = std::getenv(name);
  return value && *value ? std::string(value) : std::move(fallback);
}

struct Options {
  std::string data_dir = env_or("LETHE_DATA_DIR", "lethe-data");
  std::string format = "text";
  std::optional<std::int64_t> now;
  EngineConfig engine;
  std::optional<double> threshold;

  // seed
  std::size_t concepts = 0;
  std::size_t facts = 0;
  std::uint64_t seed = 42;
  std::string out_dir;
  ModelConfig model;

  std::vector<std::string> concept_names;
  std::string subject = "anonymous";
  std::string reason = "GDPR_ART17";
  std::string request_id;
  std::string file;
  std::string mode;
  bool verify = false;
  bool do_export = false;
  std::string addr = env_or("LETHE_ADDR", "127.0.0.1:7341");
};

class Runner {
 public:
  Runner(Options& opt, std::ostream& out, std::ostream& err)
      : opt_(opt), out_(out), err_(err) {}

  bool json() const { return opt_.format == "json"; }

  void emit(const Json& doc) { out_ << canonical_encode(doc) << '\n'; }

  Engine open() {
    EngineConfig config = opt_.engine;
    config.influence_threshold = opt_.threshold;
    return Engine(opt_.data_dir, config,
                  opt_.now ? fixed_clock(*opt_.now) : system_clock());
  }

  int seed() {
    opt_.model.seed = opt_.seed;
    const KnowledgeBase kb = synthetic_knowledge_base(opt_.concepts, opt_.facts, opt_.seed);
    const AssociationModel model = build_model(kb.vocabulary, kb.facts, opt_.model);
    const std::string dir = opt_.out_dir.empty() ? opt_.data_dir : opt_.out_dir;
    Engine::initialize(dir, model);
    std::size_t correct = 0;
    for (const Fact& f : model.facts()) correct += predict(model, f.subject) == f.object;
    if (json()) {
      emit(Json{{"data_dir", dir},
                {"concepts", model.size()},
                {"facts", model.facts().size()},
                {"facts_predicted", correct},
                {"mean_log_prob", decimal_string(mean_fact_log_prob(model))}});
    } else {
      out_ << "seeded " << model.size() << " concepts, " << model.facts().size()
           << " facts into " << dir << " (mean log-prob "
           << mean_fact_log_prob(model) << ", " << correct << " facts top-ranked)\n";
    }
    return kExitOk;
  }

  int ingest() {
    std::string text;
    if (opt_.file == "-") {
      text.assign(std::istreambuf_iterator<char>(std::cin), {});
    } else {
      text = read_file(opt_.file);
    }
    Json body = Json::parse(text, nullptr, false);
    if (body.is_discarded() || !body.is_object()) {
      fail(Errc::MalformedRequest, "sample file is not a JSON object");
    }
    if (!opt_.mode.empty()) body["mode"] = opt_.mode == "inference" ? "INFERENCE" : "TRAINING";
    Engine engine = open();
    const IngestOutcome outcome = engine.ingest(body);
    if (json()) {
      emit(outcome.to_json());
    } else {
      out_ << to_string(outcome.decision.action) << " (privacy loss "
           << outcome.decision.privacy_loss << ", policy " << outcome.decision.policy_id
           << ")\n";
    }
    return kExitOk;
  }

  int forget() {
    Engine engine = open();
    Json body{{"concepts", opt_.concept_names},
              {"subject_id", opt_.subject},
              {"reason", opt_.reason}};
    if (!opt_.request_id.empty()) body["request_id"] = opt_.request_id;
    const ErasureStatus status = engine.submit_erasure(body);
    emit(status.to_json());
    if (status.error) {
      err_ << "error: " << to_string(*status.error) << ": " << status.message << '\n';
      return exit_code_for(*status.error);
    }
    return kExitOk;
  }

  int probe() {
    Engine engine = open();
    const auto model = engine.model();
    const ConceptId id = model->require(opt_.concept_names.front());
    const ProbeSet probes = generate_probes(*model, id);
    const double value = influence(*model, id, probes.forget);
    if (json()) {
      Json doc = probe_set_to_json(*model, probes);
      doc["influence"] = decimal_string(value);
      emit(doc);
    } else {
      out_ << "forget probes (" << probes.forget.size() << "):\n";
      for (const Probe& p : probes.forget) {
        out_ << "  " << model->name(p.subject) << " -> " << model->name(p.expected) << '\n';
      }
      out_ << "related probes (" << probes.related.size() << "):\n";
      for (const Probe& p : probes.related) {
        out_ << "  " << model->name(p.subject) << " -> " << model->name(p.expected) << '\n';
      }
      out_ << "influence " << value << '\n';
    }
    return kExitOk;
  }

  int conflict() {
    Engine engine = open();
    const auto model = engine.model();
    const ConceptId id = model->require(opt_.concept_names.front());
    const ProbeSet probes = generate_probes(*model, id);
    if (probes.related.empty()) {
      if (json()) {
        emit(Json{{"concept", model->name(id)}, {"conflict", nullptr}, {"status", "VACUOUS"}});
      } else {
        out_ << "no related probes for " << model->name(id) << " (vacuous)\n";
      }
      return kExitOk;
    }
    const ConflictReport report = conflict_score(*model, probes.related);
    if (json()) {
      emit(Json{{"concept", model->name(id)}, {"conflict", conflict_to_json(*model, report)}});
    } else {
      out_ << "conflict score " << report.score << " (" << report.passed << "/"
           << report.total << ")\n";
      for (const ProbeFailure& f : report.failures) {
        out_ << "  " << model->name(f.probe.subject) << " -> expected "
             << model->name(f.probe.expected) << ", got " << model->name(f.actual) << '\n';
      }
    }
    return kExitOk;
  }

  int sweep() {
    Engine engine = open();
    const SweepOutcome outcome = engine.sweep(opt_.now ? *opt_.now : engine.now());
    if (json()) {
      emit(outcome.to_json());
    } else {
      out_ << "emitted " << outcome.emitted.size() << " erasure request(s), processed "
           << outcome.processed.size() << '\n';
      for (const ErasureStatus& s : outcome.processed) {
        out_ << "  " << s.request.request_id << ' ' << s.status << '\n';
      }
    }
    int code = kExitOk;
    for (const ErasureStatus& s : outcome.processed) {
      if (s.error) code = kExitRuntime;
    }
    return code;
  }

  int audit() {
    const DataLayout layout{opt_.data_dir};
    if (opt_.do_export) {
      if (std::filesystem::exists(layout.ledger())) out_ << read_file(layout.ledger());
      return kExitOk;
    }
    const VerifyResult result = std::filesystem::exists(layout.ledger())
                                    ? verify_chain(read_file(layout.ledger()))
                                    : VerifyResult{};
    if (json()) {
      Json doc{{"valid", result.valid}, {"entry_count", result.entry_count}};
      if (result.first_invalid_index) doc["first_invalid_index"] = *result.first_invalid_index;
      emit(doc);
    } else if (result.valid) {
      out_ << "valid, " << result.entry_count << " entries\n";
    } else {
      out_ << "invalid at index " << *result.first_invalid_index << ", "
           << result.entry_count << " entries\n";
    }
    if (opt_.verify && !result.valid) return kExitAuditInvalid;
    return kExitOk;
  }

  int serve_api() {
    Engine engine = open();
    const ListenAddress address = parse_listen_address(opt_.addr);
    err_ << "listening on " << address.host << ':' << address.port << std::endl;
    if (!serve(engine, address)) {
      err_ << "error: cannot listen on " << opt_.addr << '\n';
      return kExitRuntime;
    }
    return kExitOk;
  }

  int report() {
    Engine engine = open();
    const auto model = engine.model();
    Json rows = Json::array();
    if (!json()) {
      out_ << std::left << std::setw(16) << "concept" << std::setw(14) << "influence"
           << std::setw(8) << "forget" << std::setw(9) << "related" << "predicted\n";
    }
    for (std::size_t k = 0; k < model->size(); ++k) {
      const std::string& name = model->vocabulary()[k];
      std::optional<InfluenceView> view;
      try {
        view = engine.influence_of(name);
      } catch (const Error& e) {
        if (e.code() != Errc::TargetHasNoFacts) throw;
      }
      if (json()) {
        rows.push_back(view ? view->to_json() : Json{{"concept", name}, {"influence", nullptr}});
      } else if (view) {
        out_ << std::left << std::setw(16) << name << std::setw(14) << std::fixed
             << std::setprecision(4) << view->influence << std::setw(8) << view->forget_probes
             << std::setw(9) << view->related_probes << view->predicted << '\n';
      } else {
        out_ << std::left << std::setw(16) << name << "(no facts)\n";
      }
    }
    if (json()) {
      emit(Json{{"influence_threshold",
                 decimal_string(engine.config().unlearn().threshold_for(*model))},
                {"concepts", std::move(rows)}});
    }
    return kExitOk;
  }

 private:
  Options& opt_;
  std::ostream& out_;
  std::ostream& err_;
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options opt;
  CLI::App app{"lethe: targeted concept unlearning with a hash-chained audit ledger",
               "lethe"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--data-dir", opt.data_dir, "Data directory (env LETHE_DATA_DIR)");
  app.add_option("--format", opt.format, "Output format")
      ->check(CLI::IsMember({"text", "json"}));
  app.add_option("--now", opt.now, "Fixed clock, seconds since the Unix epoch");
  app.add_option("--alpha", opt.engine.alpha, "Corruption step size")
      ->check(CLI::PositiveNumber);
  app.add_option("--max-iters", opt.engine.max_iters, "Iteration budget per concept")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--threshold", opt.threshold,
                 "Target influence (default: chance level ln(1/(|V|-1)))");
  app.add_option("--conflict-floor", opt.engine.conflict_floor,
                 "Minimum conflict score accepted after unlearning");

  auto* seed = app.add_subcommand("seed", "Build a seeded synthetic model");
  seed->add_option("--concepts", opt.concepts, "Number of concepts")->required();
  seed->add_option("--facts", opt.facts, "Number of facts")->required();
  seed->add_option("--seed", opt.seed, "PRNG seed");
  seed->add_option("--out", opt.out_dir, "Output data directory");
  seed->add_option("--dim", opt.model.dim, "Embedding dimension");
  seed->add_option("--temperature", opt.model.temperature, "Softmax temperature");
  seed->add_option("--epochs", opt.model.train_epochs, "Training epochs");
  seed->add_option("--rate", opt.model.train_rate, "Training rate");

  auto* ingest = app.add_subcommand("ingest", "Gate and ingest one sample");
  ingest->add_option("--file", opt.file, "Sample JSON file, or - for stdin")->required();
  ingest->add_option("--mode", opt.mode, "Gate mode")
      ->check(CLI::IsMember({"training", "inference"}));

  auto* forget = app.add_subcommand("forget", "Run the full erasure lifecycle");
  forget->add_option("--concept", opt.concept_names, "Concept to erase (repeatable)")
      ->required();
  forget->add_option("--subject", opt.subject, "Data subject id");
  forget->add_option("--reason", opt.reason, "Erasure reason")
      ->check(CLI::IsMember({"GDPR_ART17", "RETENTION_EXPIRED", "GATE_TRIGGERED",
                             "USER_PREFERENCE"}));
  forget->add_option("--request-id", opt.request_id, "Explicit request UUID");

  auto* probe = app.add_subcommand("probe", "Show the probe set and influence of a concept");
  probe->add_option("--concept", opt.concept_names, "Concept")->required()->expected(1);

  auto* conflict = app.add_subcommand("conflict", "Conflict score of a concept's related probes");
  conflict->add_option("--concept", opt.concept_names, "Concept")->required()->expected(1);

  auto* sweep = app.add_subcommand("sweep", "Run the retention sweep and drain the queue");
  (void)sweep;

  auto* audit = app.add_subcommand("audit", "Verify or export the audit ledger");
  audit->add_flag("--verify", opt.verify, "Exit 3 unless the chain verifies");
  audit->add_flag("--export", opt.do_export, "Print the raw ledger");

  auto* serve_cmd = app.add_subcommand("serve", "Serve the HTTP API");
  serve_cmd->add_option("--addr", opt.addr, "host:port (env LETHE_ADDR)");

  auto* report = app.add_subcommand("report", "Influence table for every concept");
  (void)report;

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitValidation;
  }

  Runner runner(opt, out, err);
  try {
    if (seed->parsed()) return runner.seed();
    if (ingest->parsed()) return runner.ingest();
    if (forget->parsed()) return runner.forget();
    if (probe->parsed()) return runner.probe();
    if (conflict->parsed()) return runner.conflict();
    if (sweep->parsed()) return runner.sweep();
    if (audit->parsed()) return runner.audit();
    if (serve_cmd->parsed()) return runner.serve_api();
    if (report->parsed()) return runner.report();
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  err << app.help();
  return kExitValidation;
}

}  // namespace lethe

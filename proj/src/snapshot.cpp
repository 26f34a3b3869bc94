#include "lethe/snapshot.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "lethe/error.hpp"

namespace lethe {

Json model_to_json(const AssociationModel& model) {
  const ModelConfig& cfg = model.config();
  Json embeddings = Json::array();
  for (Eigen::Index k = 0; k < model.embeddings().cols(); ++k) {
    Json column = Json::array();
    for (Eigen::Index i = 0; i < model.embeddings().rows(); ++i) {
      column.push_back(model.embeddings()(i, k));
    }
    embeddings.push_back(std::move(column));
  }
  Json facts = Json::array();
  for (const Fact& f : model.facts()) {
    facts.push_back({{"subject", f.subject.value},
                     {"object", f.object.value},
                     {"categories", f.categories}});
  }
  return Json{{"format_version", kSnapshotFormatVersion},
              {"config",
               {{"dim", cfg.dim},
                {"temperature", cfg.temperature},
                {"seed", cfg.seed},
                {"train_epochs", cfg.train_epochs},
                {"train_rate", cfg.train_rate}}},
              {"vocabulary", model.vocabulary()},
              {"embeddings", std::move(embeddings)},
              {"facts", std::move(facts)}};
}

AssociationModel model_from_json(const Json& doc) {
  try {
    if (doc.at("format_version").get<int>() != kSnapshotFormatVersion) {
      fail(Errc::StorageFailure, "unsupported snapshot format_version");
    }
    const Json& c = doc.at("config");
    ModelConfig cfg;
    cfg.dim = c.at("dim").get<Eigen::Index>();
    cfg.temperature = c.at("temperature").get<double>();
    cfg.seed = c.at("seed").get<std::uint64_t>();
    cfg.train_epochs = c.at("train_epochs").get<int>();
    cfg.train_rate = c.at("train_rate").get<double>();
    cfg.validate();

    auto vocabulary = doc.at("vocabulary").get<std::vector<std::string>>();
    const Json& columns = doc.at("embeddings");
    if (!columns.is_array() || columns.size() != vocabulary.size()) {
      fail(Errc::StorageFailure, "snapshot embeddings do not match vocabulary");
    }
    Matrix embeddings(cfg.dim, static_cast<Eigen::Index>(vocabulary.size()));
    for (std::size_t k = 0; k < columns.size(); ++k) {
      const auto column = columns[k].get<std::vector<double>>();
      if (column.size() != static_cast<std::size_t>(cfg.dim)) {
        fail(Errc::StorageFailure, "snapshot embedding has wrong dimension");
      }
      embeddings.col(static_cast<Eigen::Index>(k)) =
          Eigen::Map<const Vector>(column.data(), cfg.dim);
    }
    std::vector<Fact> facts;
    for (const Json& f : doc.at("facts")) {
      facts.push_back({ConceptId{f.at("subject").get<std::size_t>()},
                       ConceptId{f.at("object").get<std::size_t>()},
                       f.at("categories").get<std::set<std::string>>()});
    }
    return AssociationModel::from_parts(cfg, std::move(vocabulary), std::move(embeddings),
                                        std::move(facts));
  } catch (const Json::exception& e) {
    fail(Errc::StorageFailure, std::string("malformed model snapshot: ") + e.what());
  }
}

void save_model(const AssociationModel& model, const std::filesystem::path& path) {
  write_file_atomic(path, compact_encode(model_to_json(model)));
}

AssociationModel load_model(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  Json doc = Json::parse(bytes, nullptr, false);
  if (doc.is_discarded()) fail(Errc::StorageFailure, "snapshot is not JSON: " + path.string());
  return model_from_json(doc);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  std::FILE* file = std::fopen(tmp.c_str(), "wb");
  if (!file) fail(Errc::StorageFailure, "cannot write " + tmp.string());
  const bool ok = std::fwrite(bytes.data(), 1, bytes.size(), file) == bytes.size() &&
                  std::fflush(file) == 0 && ::fsync(fileno(file)) == 0;
  std::fclose(file);
  if (!ok) fail(Errc::StorageFailure, "cannot write " + tmp.string());
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(Errc::StorageFailure, "cannot rename onto " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::StorageFailure, "cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

Json probe_to_json(const AssociationModel& model, const Probe& probe) {
  return Json{{"subject", model.name(probe.subject)},
              {"expected", model.name(probe.expected)}};
}

Json conflict_to_json(const AssociationModel& model, const ConflictReport& report) {
  Json failures = Json::array();
  for (const ProbeFailure& f : report.failures) {
    Json item = probe_to_json(model, f.probe);
    item["actual"] = model.name(f.actual);
    failures.push_back(std::move(item));
  }
  return Json{{"score", decimal_string(report.score)},
              {"total", report.total},
              {"passed", report.passed},
              {"failures", std::move(failures)}};
}

Json probe_set_to_json(const AssociationModel& model, const ProbeSet& probes) {
  Json forget = Json::array();
  for (const Probe& p : probes.forget) forget.push_back(probe_to_json(model, p));
  Json related = Json::array();
  for (const Probe& p : probes.related) related.push_back(probe_to_json(model, p));
  return Json{{"target", model.name(probes.target)},
              {"forget", std::move(forget)},
              {"related", std::move(related)}};
}

Json unlearn_report_to_json(const AssociationModel& model, const UnlearnReport& report,
                            bool include_trace) {
  Json doc{{"concept", model.name(report.target)},
           {"iterations_run", report.iterations_run},
           {"initial_influence", decimal_string(report.initial_influence)},
           {"final_influence", decimal_string(report.final_influence)},
           {"influence_threshold", decimal_string(report.threshold)},
           {"alpha", decimal_string(report.alpha)},
           {"converged", report.converged},
           {"stop_reason", std::string(to_string(report.stop_reason))},
           {"halvings", report.halvings},
           {"conflict", report.conflict ? conflict_to_json(model, *report.conflict)
                                        : Json(nullptr)}};
  if (include_trace) {
    Json trace = Json::array();
    for (double v : report.trace) trace.push_back(decimal_string(v));
    doc["trace"] = std::move(trace);
  }
  return doc;
}

}  // namespace lethe

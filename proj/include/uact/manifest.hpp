#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uact/episode_io.hpp"
#include "uact/types.hpp"

namespace uact {

inline constexpr int kManifestVersion = 1;

struct EpisodeHeader {
  std::string id;
  std::string dataset;
  std::string embodiment;
  std::string task;
  std::string skill;
  std::size_t frame_count = 0;
  bool single_arm = false;
  std::uint64_t offset = 0;  // byte offset of the record in the episode store
  std::uint64_t length = 0;  // bytes including the trailing newline
  bool operator==(const EpisodeHeader&) const = default;
};

struct StratumTotals {
  std::map<std::string, std::size_t> dataset;
  std::map<std::string, std::size_t> embodiment;
  std::map<std::string, std::size_t> task;
  std::map<std::string, std::size_t> skill;
  std::size_t single_arm = 0;
  std::size_t dual_arm = 0;
  bool operator==(const StratumTotals&) const = default;
};

struct CorpusManifest {
  std::vector<EpisodeHeader> episodes;
  StratumTotals totals;
  bool operator==(const CorpusManifest&) const = default;
};

inline StratumTotals count_strata(const std::vector<EpisodeHeader>& headers) {
  StratumTotals t;
  for (const auto& h : headers) {
    ++t.dataset[h.dataset];
    ++t.embodiment[h.embodiment];
    ++t.task[h.task];
    ++t.skill[h.skill];
    ++(h.single_arm ? t.single_arm : t.dual_arm);
  }
  return t;
}

inline EpisodeHeader header_of(const EpisodeRecord& e) {
  return {e.id, e.dataset, e.embodiment, e.task, e.skill, e.frames.size(), e.single_arm(), 0, 0};
}

// Headers ordered by id; offsets describe the store written in that order.
inline CorpusManifest build_manifest(const std::vector<EpisodeRecord>& episodes) {
  std::vector<const EpisodeRecord*> order;
  order.reserve(episodes.size());
  for (const auto& e : episodes) order.push_back(&e);
  std::sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->id < b->id; });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (order[i]->id == order[i - 1]->id) {
      throw Error("duplicate-id", "duplicate episode id '" + order[i]->id + "'");
    }
  }
  CorpusManifest m;
  std::uint64_t offset = 0;
  for (const auto* e : order) {
    EpisodeHeader h = header_of(*e);
    h.offset = offset;
    h.length = episode_line(*e).size();
    offset += h.length;
    m.episodes.push_back(std::move(h));
  }
  m.totals = count_strata(m.episodes);
  return m;
}

inline json totals_to_json(const StratumTotals& t) {
  return json{{"dataset", t.dataset}, {"embodiment", t.embodiment}, {"task", t.task},
              {"skill", t.skill},     {"single_arm", t.single_arm}, {"dual_arm", t.dual_arm}};
}

inline json manifest_to_json(const CorpusManifest& m) {
  json eps = json::array();
  for (const auto& h : m.episodes) {
    eps.push_back({{"id", h.id},
                   {"dataset", h.dataset},
                   {"embodiment", h.embodiment},
                   {"task", h.task},
                   {"skill", h.skill},
                   {"frame_count", h.frame_count},
                   {"single_arm", h.single_arm},
                   {"offset", h.offset},
                   {"length", h.length}});
  }
  return json{{"format", "uact-manifest"}, {"version", kManifestVersion}, {"episodes", eps},
              {"totals", totals_to_json(m.totals)}};
}

// Validates version and that stored totals match a recount of the headers.
inline CorpusManifest manifest_from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != "uact-manifest" || j.at("version").get<int>() != kManifestVersion) {
      throw Error("manifest-version", "unsupported manifest format or version");
    }
    CorpusManifest m;
    for (const auto& h : j.at("episodes")) {
      m.episodes.push_back({h.at("id").get<std::string>(), h.at("dataset").get<std::string>(),
                            h.at("embodiment").get<std::string>(), h.at("task").get<std::string>(),
                            h.at("skill").get<std::string>(), h.at("frame_count").get<std::size_t>(),
                            h.at("single_arm").get<bool>(), h.at("offset").get<std::uint64_t>(),
                            h.at("length").get<std::uint64_t>()});
    }
    const auto& t = j.at("totals");
    m.totals.dataset = t.at("dataset").get<std::map<std::string, std::size_t>>();
    m.totals.embodiment = t.at("embodiment").get<std::map<std::string, std::size_t>>();
    m.totals.task = t.at("task").get<std::map<std::string, std::size_t>>();
    m.totals.skill = t.at("skill").get<std::map<std::string, std::size_t>>();
    m.totals.single_arm = t.at("single_arm").get<std::size_t>();
    m.totals.dual_arm = t.at("dual_arm").get<std::size_t>();
    if (!(count_strata(m.episodes) == m.totals)) {
      throw Error("manifest-totals-mismatch", "manifest stratum totals disagree with its headers");
    }
    return m;
  } catch (const json::exception& ex) {
    throw Error("bad-manifest", std::string("malformed manifest: ") + ex.what());
  }
}

}  // namespace uact

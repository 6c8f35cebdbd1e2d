#pragma once

// JSON form of ingested EpisodeRecords (the episode store, one object per line).

#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uact/error.hpp"
#include "uact/types.hpp"

namespace uact {

using json = nlohmann::json;

inline Arm parse_arm(const std::string& s) {
  if (s == "left") return Arm::Left;
  if (s == "right") return Arm::Right;
  throw Error("unknown-arm", "unknown arm '" + s + "'");
}

inline const char* mode_name(ActionMode m) { return m == ActionMode::Absolute ? "absolute" : "delta"; }

inline ActionMode parse_mode(const std::string& s) {
  if (s == "absolute") return ActionMode::Absolute;
  if (s == "delta") return ActionMode::Delta;
  throw Error("unknown-mode", "unknown action mode '" + s + "'");
}

inline json arm_state_to_json(const ArmState& s) {
  const auto& p = s.pose.position;
  const auto& q = s.pose.orientation;
  return json{{"p", {p[0], p[1], p[2]}}, {"q", {q.w, q.x, q.y, q.z}}, {"g", s.gripper}};
}

inline ArmState arm_state_from_json(const json& j) {
  const auto& p = j.at("p");
  const auto& q = j.at("q");
  ArmState s;
  s.pose.position = Vec3(p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>());
  s.pose.orientation = {q.at(0).get<double>(), q.at(1).get<double>(), q.at(2).get<double>(), q.at(3).get<double>()};
  s.gripper = j.at("g").get<double>();
  return s;
}

inline json episode_to_json(const EpisodeRecord& e) {
  json j;
  j["id"] = e.id;
  j["dataset"] = e.dataset;
  j["embodiment"] = e.embodiment;
  j["task"] = e.task;
  j["skill"] = e.skill;
  j["fps"] = e.fps;
  j["action_rate"] = e.action_rate;
  j["instruction"] = e.instruction;
  j["mode"] = mode_name(e.mode);
  j["action_dim"] = e.action_dim;
  j["viewpoint_ok"] = e.viewpoint_ok;
  j["flags"] = e.flags;
  json arms = json::array();
  for (Arm a : e.arms) arms.push_back(arm_name(a));
  j["arms"] = arms;
  json subtasks = json::array();
  for (const auto& s : e.subtasks) subtasks.push_back({{"start", s.start}, {"end", s.end}, {"text", s.text}});
  j["subtasks"] = subtasks;
  json frames = json::array();
  for (const auto& f : e.frames) {
    json jf;
    jf["index"] = f.index;
    if (f.left) jf["left"] = arm_state_to_json(*f.left);
    if (f.right) jf["right"] = arm_state_to_json(*f.right);
    jf["raw"] = f.raw_action;
    if (f.brightness) jf["brightness"] = *f.brightness;
    if (f.sharpness) jf["sharpness"] = *f.sharpness;
    frames.push_back(std::move(jf));
  }
  j["frames"] = std::move(frames);
  return j;
}

inline EpisodeRecord episode_from_json(const json& j) {
  EpisodeRecord e;
  e.id = j.at("id").get<std::string>();
  e.dataset = j.at("dataset").get<std::string>();
  e.embodiment = j.at("embodiment").get<std::string>();
  e.task = j.at("task").get<std::string>();
  e.skill = j.at("skill").get<std::string>();
  e.fps = j.at("fps").get<double>();
  e.action_rate = j.at("action_rate").get<double>();
  e.instruction = j.at("instruction").get<std::string>();
  e.mode = parse_mode(j.at("mode").get<std::string>());
  e.action_dim = j.at("action_dim").get<std::size_t>();
  e.viewpoint_ok = j.at("viewpoint_ok").get<bool>();
  e.flags = j.at("flags").get<std::vector<std::string>>();
  for (const auto& a : j.at("arms")) e.arms.push_back(parse_arm(a.get<std::string>()));
  for (const auto& s : j.at("subtasks")) {
    e.subtasks.push_back({s.at("start").get<std::int64_t>(), s.at("end").get<std::int64_t>(),
                          s.at("text").get<std::string>()});
  }
  for (const auto& jf : j.at("frames")) {
    FrameRecord f;
    f.index = jf.at("index").get<std::int64_t>();
    if (jf.contains("left")) f.left = arm_state_from_json(jf["left"]);
    if (jf.contains("right")) f.right = arm_state_from_json(jf["right"]);
    f.raw_action = jf.at("raw").get<std::vector<double>>();
    if (jf.contains("brightness")) f.brightness = jf["brightness"].get<double>();
    if (jf.contains("sharpness")) f.sharpness = jf["sharpness"].get<double>();
    e.frames.push_back(std::move(f));
  }
  return e;
}

// One line per episode; the line text is what manifest byte offsets index.
inline std::string episode_line(const EpisodeRecord& e) { return episode_to_json(e).dump() + "\n"; }

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    lines.push_back(std::move(line));
  }
  return lines;
}

inline std::vector<EpisodeRecord> read_episode_store(const std::string& path) {
  std::vector<EpisodeRecord> out;
  std::size_t lineno = 0;
  for (const auto& line : read_lines(path)) {
    ++lineno;
    try {
      out.push_back(episode_from_json(json::parse(line)));
    } catch (const json::exception& ex) {
      throw Error("bad-episode-store", path + ": record " + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return out;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

inline void write_episode_store(const std::string& path, const std::vector<EpisodeRecord>& episodes) {
  std::string text;
  for (const auto& e : episodes) text += episode_line(e);
  write_text_file(path, text);
}

inline void write_json_file(const std::string& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

inline json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  try {
    return json::parse(in);
  } catch (const json::exception& ex) {
    throw Error("invalid-json", path + ": " + ex.what());
  }
}

}  // namespace uact

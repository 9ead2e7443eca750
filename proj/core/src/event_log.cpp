#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include "json.hpp"
#include "ldla/dla.hpp"
#include "ldla/sdla.hpp"

namespace ldla {
namespace {

using nlohmann::json;

json site_json(Site x) {
  if (x >= std::numeric_limits<std::int64_t>::min() && x <= std::numeric_limits<std::int64_t>::max())
    return static_cast<std::int64_t>(x);
  return to_string(x);
}

Site site_from(const json& j) {
  if (j.is_string()) return parse_site(j.get<std::string>());
  if (j.is_number_integer()) return static_cast<Site>(j.get<std::int64_t>());
  throw std::runtime_error("event log: expected an integer site");
}

json snapshot_json(const char* type, const Snapshot& s) {
  json j;
  j["type"] = type;
  j["n"] = s.n;
  j["t"] = s.t;
  j["diameter"] = site_json(s.diameter);
  j["capacity"] = s.capacity;
  return j;
}

Snapshot snapshot_from(const json& j) {
  return Snapshot{j.at("n").get<std::int64_t>(), j.at("t").get<double>(), site_from(j.at("diameter")),
                  j.at("capacity").get<double>()};
}

}  // namespace

void write_event_log(std::ostream& out, const EventLog& log) {
  const LogHeader& h = log.header;
  json head;
  head["type"] = "header";
  head["version"] = h.version;
  head["alpha"] = h.alpha;
  head["seed"] = h.seed;
  head["n_target"] = h.n_target;
  head["step_law"] = {{"alpha", h.alpha}, {"table_cutoff", h.table_cutoff}, {"zeta", h.zeta},
                      {"tail_constant", h.tail_constant}};
  head["green"] = {{"x_cache", h.x_cache}, {"fingerprint", h.green_fingerprint}};
  head["split_threshold"] = h.split_threshold;
  head["D"] = h.D ? site_json(*h.D) : json(nullptr);
  out << head.dump() << '\n';
  for (const GluingEvent& e : log.events) {
    json j;
    j["type"] = "event";
    j["n_before"] = e.n_before;
    j["t"] = e.t;
    j["parent"] = site_json(e.parent);
    j["child"] = site_json(e.child);
    j["step_size"] = site_json(e.step_size);
    j["rejected_proposals"] = e.rejected_proposals;
    j["split_flag"] = e.split_flag;
    j["rejected_splits"] = e.rejected_splits;
    j["capacity"] = e.capacity;
    out << j.dump() << '\n';
  }
  for (const Snapshot& s : log.snapshots) out << snapshot_json("snapshot", s).dump() << '\n';
  if (log.final_state) {
    json j = snapshot_json("final", *log.final_state);
    j["clamp_count"] = log.clamp_count;
    j["refactor_count"] = log.refactor_count;
    j["indefinite_fallback"] = log.indefinite_fallback;
    out << j.dump() << '\n';
  }
}

EventLog read_event_log(std::istream& in) {
  EventLog log;
  std::string line;
  bool have_header = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw std::runtime_error("event log line " + std::to_string(lineno) + ": " + e.what());
    }
    const std::string type = j.value("type", "");
    try {
      if (type == "header") {
        LogHeader& h = log.header;
        h.version = j.at("version").get<std::string>();
        h.alpha = j.at("alpha").get<double>();
        h.seed = j.at("seed").get<std::uint64_t>();
        h.n_target = j.value("n_target", std::int64_t{0});
        const json& law = j.at("step_law");
        h.table_cutoff = law.at("table_cutoff").get<std::int64_t>();
        h.zeta = law.value("zeta", 0.0);
        h.tail_constant = law.value("tail_constant", 0.0);
        const json& g = j.at("green");
        h.x_cache = g.at("x_cache").get<std::int64_t>();
        h.green_fingerprint = g.at("fingerprint").get<std::string>();
        h.split_threshold = j.value("split_threshold", std::string("none"));
        if (j.contains("D") && !j["D"].is_null()) h.D = site_from(j["D"]);
        have_header = true;
      } else if (type == "event") {
        if (!have_header) throw std::runtime_error("event before header");
        GluingEvent e;
        e.n_before = j.at("n_before").get<std::int64_t>();
        e.t = j.at("t").get<double>();
        e.parent = site_from(j.at("parent"));
        e.child = site_from(j.at("child"));
        e.step_size = site_from(j.at("step_size"));
        e.rejected_proposals = j.at("rejected_proposals").get<std::int64_t>();
        e.split_flag = j.at("split_flag").get<bool>();
        e.rejected_splits = j.value("rejected_splits", std::int64_t{0});
        e.capacity = j.value("capacity", 0.0);
        log.events.push_back(e);
      } else if (type == "snapshot") {
        log.snapshots.push_back(snapshot_from(j));
      } else if (type == "final") {
        log.final_state = snapshot_from(j);
        log.clamp_count = j.value("clamp_count", std::uint64_t{0});
        log.refactor_count = j.value("refactor_count", std::uint64_t{0});
        log.indefinite_fallback = j.value("indefinite_fallback", false);
      } else {
        throw std::runtime_error("unknown record type '" + type + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("event log line " + std::to_string(lineno) + ": " + e.what());
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error("event log line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!have_header) throw std::runtime_error("event log: missing header");
  return log;
}

namespace {

template <class T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

json opt_site(const std::optional<Site>& v) { return v ? site_json(*v) : json(nullptr); }

json sites(const std::vector<Site>& v) {
  json a = json::array();
  for (Site x : v) a.push_back(site_json(x));
  return a;
}

}  // namespace

std::string to_json_line(const SdlaResult& r) {
  json j;
  j["type"] = "sdla";
  j["version"] = kVersion;
  j["n"] = r.n;
  j["q"] = r.q;
  j["D"] = site_json(r.D);
  j["seed"] = r.seed;
  j["stream_hat"] = r.stream_hat;
  j["stream_s"] = r.stream_s;
  j["split_count"] = r.split_count;
  j["beta_q"] = opt(r.beta_q);
  j["b_q"] = opt_site(r.b_q);
  j["zeta_q"] = opt(r.zeta_q);
  j["sigma"] = r.sigma;
  j["overlap"] = r.overlap;
  j["S"] = sites(r.S);
  j["S_hat"] = sites(r.S_hat);
  json ev = json::array();
  for (const SdlaEvent& e : r.events)
    ev.push_back({{"component", e.component == 1 ? "S" : "S_hat"},
                  {"t", e.event.t},
                  {"parent", site_json(e.event.parent)},
                  {"child", site_json(e.event.child)},
                  {"step_size", site_json(e.event.step_size)},
                  {"rejected_proposals", e.event.rejected_proposals},
                  {"split_flag", e.event.split_flag}});
  j["events"] = ev;
  return j.dump();
}

std::string to_json_line(const CouplingReport& r) {
  json j;
  j["type"] = "coupling";
  j["version"] = kVersion;
  j["n"] = r.n;
  j["q"] = r.q;
  j["D"] = site_json(r.D);
  j["seed"] = r.seed;
  j["born"] = r.born;
  j["beta_q"] = opt(r.beta_q);
  j["b_q"] = opt_site(r.b_q);
  j["zeta_q"] = opt(r.zeta_q);
  j["equal_at_tau"] = r.equal_at_tau;
  j["first_interaction"] =
      r.first_interaction ? json{{"t", r.first_interaction->t}, {"kind", r.first_interaction->kind}} : json(nullptr);
  j["trajectory_budget_exceeded"] = r.trajectory_budget_exceeded;
  j["truncation_error"] = r.truncation_error;
  j["colour_consistent"] = r.colour_consistent;
  j["s_size"] = r.s_size;
  j["s_hat_size"] = r.s_hat_size;
  j["end_time"] = r.end_time;
  json tr = json::array();
  for (const auto& [t, size] : r.s_trace) tr.push_back({t, size});
  j["s_trace"] = tr;
  return j.dump();
}

}  // namespace ldla

#include "stickylab/stopping.hpp"

#include <cmath>

#include "stickylab/error.hpp"
#include "stickylab/format.hpp"

namespace stickylab {

namespace {

double rule_number(std::string_view text, std::string_view what) {
  try {
    return parse_double(text, what);
  } catch (const Error& e) {
    fail(ErrorCode::InvalidRule, e.what());
  }
}

}  // namespace

StoppingRule StoppingRule::deterministic(double t0) {
  if (!std::isfinite(t0) || t0 < 0.0)
    fail(ErrorCode::InvalidRule, "deterministic stopping time must be finite and >= 0");
  return StoppingRule(Kind::Deterministic, t0, nullptr);
}

StoppingRule StoppingRule::hitting_from(StoppingRule start, double delta) {
  if (!std::isfinite(delta) || !(delta > 0.0))
    fail(ErrorCode::InvalidRule, "hitting distance must be positive");
  if (start.depth() + 1 > kMaxRuleDepth)
    fail(ErrorCode::InvalidRule, "stopping rule nesting too deep");
  return StoppingRule(Kind::HittingFrom, delta,
                      std::make_shared<const StoppingRule>(std::move(start)));
}

StoppingRule StoppingRule::passage_to_level(double level) {
  if (!std::isfinite(level)) fail(ErrorCode::InvalidRule, "passage level must be finite");
  return StoppingRule(Kind::PassageToLevel, level, nullptr);
}

StoppingRule StoppingRule::first_abs_exceed(double level) {
  if (!std::isfinite(level) || !(level > 0.0))
    fail(ErrorCode::InvalidRule, "exceedance level must be positive");
  return StoppingRule(Kind::FirstAbsExceed, level, nullptr);
}

const StoppingRule& StoppingRule::start() const {
  if (!start_) fail(ErrorCode::InvalidRule, "rule has no start rule");
  return *start_;
}

std::size_t StoppingRule::depth() const noexcept {
  std::size_t d = 1;
  for (const StoppingRule* r = this; r->start_; r = r->start_.get()) ++d;
  return d;
}

StoppingRule StoppingRule::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos)
    fail(ErrorCode::InvalidRule, "stopping rule '" + std::string(text) + "' lacks ':'");
  const auto head = text.substr(0, colon);
  auto rest = text.substr(colon + 1);

  if (head == "det") return deterministic(rule_number(rest, "deterministic time"));
  if (head == "pass") return passage_to_level(rule_number(rest, "passage level"));
  if (head == "absexceed") return first_abs_exceed(rule_number(rest, "exceedance level"));
  if (head == "hit") {
    const auto at = rest.find('@');
    if (at == std::string_view::npos)
      return hitting_from(deterministic(0.0), rule_number(rest, "hitting distance"));
    // Depth is bounded before recursing so hostile input cannot blow the stack.
    std::size_t nested = 0;
    for (char c : rest) nested += (c == '@');
    if (nested + 1 > kMaxRuleDepth) fail(ErrorCode::InvalidRule, "stopping rule nesting too deep");
    return hitting_from(parse(rest.substr(at + 1)),
                        rule_number(rest.substr(0, at), "hitting distance"));
  }
  fail(ErrorCode::InvalidRule, "unknown stopping rule '" + std::string(head) + "'");
}

std::string StoppingRule::to_string() const {
  switch (kind_) {
    case Kind::Deterministic:
      return "det:" + format_short(param_);
    case Kind::PassageToLevel:
      return "pass:" + format_short(param_);
    case Kind::FirstAbsExceed:
      return "absexceed:" + format_short(param_);
    case Kind::HittingFrom:
      return "hit:" + format_short(param_) + "@" + start_->to_string();
  }
  return {};
}

StopResult passage_time(const Path& path, double level) {
  const auto x = path.values();
  if (x[0] == level) return StopResult::at(path.grid(), 0);
  for (std::size_t j = 1; j < x.size(); ++j) {
    if ((x[j - 1] - level) * (x[j] - level) <= 0.0) return StopResult::at(path.grid(), j);
  }
  return StopResult::not_stopped();
}

StopResult evaluate_rule(const StoppingRule& rule, const Path& path) {
  const auto x = path.values();
  switch (rule.kind()) {
    case StoppingRule::Kind::Deterministic: {
      const auto idx = path.grid().index_at_or_after(rule.parameter());
      if (!idx)
        fail(ErrorCode::InvalidRule, "deterministic time " + format_short(rule.parameter()) +
                                         " lies beyond the grid horizon");
      return StopResult::at(path.grid(), *idx);
    }
    case StoppingRule::Kind::HittingFrom: {
      const StopResult from = evaluate_rule(rule.start(), path);
      if (!from.stopped()) return from;
      const double anchor = x[from.index()];
      for (std::size_t j = from.index() + 1; j < x.size(); ++j) {
        if (std::abs(x[j] - anchor) > rule.parameter()) return StopResult::at(path.grid(), j);
      }
      return StopResult::not_stopped();
    }
    case StoppingRule::Kind::PassageToLevel:
      return passage_time(path, rule.parameter());
    case StoppingRule::Kind::FirstAbsExceed:
      for (std::size_t j = 0; j < x.size(); ++j) {
        if (std::abs(x[j]) >= rule.parameter()) return StopResult::at(path.grid(), j);
      }
      return StopResult::not_stopped();
  }
  fail(ErrorCode::InvalidRule, "malformed stopping rule");
}

EventDescriptor EventDescriptor::whole_space() { return EventDescriptor(Kind::WholeSpace, 0, 0); }

EventDescriptor EventDescriptor::value_at_stop_in_range(double lo, double hi) {
  if (!(lo <= hi)) fail(ErrorCode::InvalidArgument, "event range needs lo <= hi");
  return EventDescriptor(Kind::ValueAtStopInRange, lo, hi);
}

EventDescriptor EventDescriptor::stopped_before(double horizon) {
  if (!std::isfinite(horizon)) fail(ErrorCode::InvalidArgument, "event horizon must be finite");
  return EventDescriptor(Kind::StoppedBeforeHorizon, horizon, 0);
}

EventDescriptor EventDescriptor::conjunction(std::vector<EventDescriptor> parts) {
  if (parts.empty()) fail(ErrorCode::InvalidArgument, "empty event conjunction");
  EventDescriptor e(Kind::Conjunction, 0, 0);
  e.parts_ = std::move(parts);
  return e;
}

EventDescriptor EventDescriptor::parse(std::string_view text) {
  if (text.find('&') != std::string_view::npos) {
    std::vector<EventDescriptor> parts;
    std::size_t begin = 0;
    while (begin <= text.size()) {
      const auto amp = text.find('&', begin);
      const auto end = amp == std::string_view::npos ? text.size() : amp;
      parts.push_back(parse(text.substr(begin, end - begin)));
      if (amp == std::string_view::npos) break;
      begin = amp + 1;
    }
    return conjunction(std::move(parts));
  }
  if (text == "all") return whole_space();
  const auto colon = text.find(':');
  const auto head = text.substr(0, colon);
  if (colon != std::string_view::npos && head == "before")
    return stopped_before(parse_double(text.substr(colon + 1), "event horizon"));
  if (colon != std::string_view::npos && head == "stoprange") {
    const auto rest = text.substr(colon + 1);
    const auto sep = rest.find(':');
    if (sep == std::string_view::npos)
      fail(ErrorCode::InvalidArgument, "stoprange needs stoprange:<lo>:<hi>");
    return value_at_stop_in_range(parse_double(rest.substr(0, sep), "range low"),
                                  parse_double(rest.substr(sep + 1), "range high"));
  }
  fail(ErrorCode::InvalidArgument, "unknown event '" + std::string(text) + "'");
}

std::string EventDescriptor::to_string() const {
  switch (kind_) {
    case Kind::WholeSpace:
      return "all";
    case Kind::ValueAtStopInRange:
      return "stoprange:" + format_short(a_) + ":" + format_short(b_);
    case Kind::StoppedBeforeHorizon:
      return "before:" + format_short(a_);
    case Kind::Conjunction: {
      std::string s;
      for (std::size_t i = 0; i < parts_.size(); ++i) {
        if (i) s += '&';
        s += parts_[i].to_string();
      }
      return s;
    }
  }
  return {};
}

bool evaluate_event(const EventDescriptor& event, const Path& path, const StopResult& stop) {
  switch (event.kind()) {
    case EventDescriptor::Kind::WholeSpace:
      return true;
    case EventDescriptor::Kind::ValueAtStopInRange: {
      if (!stop.stopped()) return false;
      const double v = path[stop.index()];
      return v >= event.lo() && v <= event.hi();
    }
    case EventDescriptor::Kind::StoppedBeforeHorizon:
      return stop.stopped() && stop.time() < event.horizon();
    case EventDescriptor::Kind::Conjunction:
      for (const auto& p : event.parts()) {
        if (!evaluate_event(p, path, stop)) return false;
      }
      return true;
  }
  return false;
}

}  // namespace stickylab

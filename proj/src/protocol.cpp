#include "helpseek/protocol.hpp"

#include <cctype>
#include <optional>
#include <utility>

namespace helpseek {
namespace {

enum class Tag { Think, Search, Answer, Document, Warning };

std::optional<Tag> lookup(std::string_view name, const TagGrammar& g) {
  if (name == g.think) return Tag::Think;
  if (name == g.search) return Tag::Search;
  if (name == g.answer) return Tag::Answer;
  if (name == g.document) return Tag::Document;
  if (name == g.warning) return Tag::Warning;
  return std::nullopt;
}

struct Element {
  Tag tag;
  std::string body;
  std::size_t offset;
};

struct Scan {
  std::vector<Element> elements;
  bool cut = false;  // text ended inside an element
};

Scan scan(std::string_view text, const TagGrammar& g) {
  Scan out;
  std::size_t pos = 0;
  const std::size_t n = text.size();
  while (true) {
    while (pos < n && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    if (pos == n) break;
    if (text[pos] != '<') throw ParseError("text outside of an element", pos);
    const auto gt = text.find('>', pos);
    if (gt == std::string_view::npos) {
      out.cut = true;
      break;
    }
    const auto name = text.substr(pos + 1, gt - pos - 1);
    if (!name.empty() && name.front() == '/') {
      throw ParseError("closing tag <" + std::string(name) + "> without an opening tag", pos);
    }
    const auto tag = lookup(name, g);
    if (!tag) throw ParseError("unknown tag <" + std::string(name) + ">", pos);

    const auto body_start = gt + 1;
    const auto lt = text.find('<', body_start);
    if (lt == std::string_view::npos) {
      out.cut = true;
      break;
    }
    const std::string close = "</" + std::string(name) + ">";
    if (text.compare(lt, close.size(), close) != 0) {
      const auto rest = text.substr(lt);
      if (rest.size() < close.size() && std::string_view(close).starts_with(rest)) {
        out.cut = true;
        break;
      }
      throw ParseError("interleaved tag inside <" + std::string(name) + ">", lt);
    }
    out.elements.push_back({*tag, std::string(text.substr(body_start, lt - body_start)), pos});
    pos = lt + close.size();
  }
  return out;
}

void check_body(std::string_view body) {
  if (body.find('<') != std::string_view::npos) {
    throw std::invalid_argument("step body contains '<': " + std::string(body));
  }
}

void emit(std::string& out, std::string_view tag, std::string_view body) {
  check_body(body);
  out += '<';
  out += tag;
  out += '>';
  out += body;
  out += "</";
  out += tag;
  out += '>';
}

}  // namespace

Trajectory parse(std::string_view text, const TagGrammar& grammar) {
  const Scan sc = scan(text, grammar);
  Trajectory t;
  for (const auto& el : sc.elements) {
    auto& steps = t.steps;
    if (!steps.empty() && std::holds_alternative<Answer>(steps.back())) {
      throw ParseError("element after the final answer", el.offset);
    }
    switch (el.tag) {
      case Tag::Think: steps.emplace_back(Think{el.body}); break;
      case Tag::Search: steps.emplace_back(Search{el.body}); break;
      case Tag::Answer: steps.emplace_back(Answer{el.body}); break;
      case Tag::Document:
        if (!steps.empty()) {
          if (auto* docs = std::get_if<Documents>(&steps.back())) {
            docs->items.push_back(el.body);
            break;
          }
        }
        if (steps.empty() || !std::holds_alternative<Search>(steps.back())) {
          throw ParseError("document element does not follow a search", el.offset);
        }
        steps.emplace_back(Documents{{el.body}});
        break;
      case Tag::Warning:
        if (steps.empty() || !std::holds_alternative<Search>(steps.back())) {
          throw ParseError("warning element does not follow a search", el.offset);
        }
        steps.emplace_back(Warning{el.body});
        break;
    }
  }
  t.truncated = t.answer() == nullptr;
  return t;
}

std::string serialize(const Trajectory& trajectory, const TagGrammar& grammar) {
  validate(trajectory);
  std::string out;
  for (const auto& step : trajectory.steps) {
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Think>) {
            emit(out, grammar.think, s.text);
          } else if constexpr (std::is_same_v<T, Search>) {
            emit(out, grammar.search, s.query);
          } else if constexpr (std::is_same_v<T, Documents>) {
            for (const auto& d : s.items) emit(out, grammar.document, d);
          } else if constexpr (std::is_same_v<T, Warning>) {
            emit(out, grammar.warning, s.text);
          } else {
            emit(out, grammar.answer, s.text);
          }
        },
        step);
  }
  return out;
}

void InferenceConfig::check() const {
  if (max_searches < 0) throw ConfigError("search budget L must be non-negative");
}

namespace {

enum class ActionKind { Search, Answer, None, Malformed };

struct ParsedAction {
  ActionKind kind = ActionKind::Malformed;
  std::vector<Step> thinks;
  std::string payload;
};

// An action is zero or more think elements followed by at most one search
// or answer element, which must come last.
ParsedAction parse_action(std::string_view text, const TagGrammar& g) {
  ParsedAction out;
  Scan sc;
  try {
    sc = scan(text, g);
  } catch (const ParseError&) {
    return out;
  }
  for (std::size_t i = 0; i < sc.elements.size(); ++i) {
    const auto& el = sc.elements[i];
    const bool last = i + 1 == sc.elements.size();
    switch (el.tag) {
      case Tag::Think: out.thinks.emplace_back(Think{el.body}); break;
      case Tag::Search:
      case Tag::Answer:
        if (!last) return ParsedAction{};
        out.kind = el.tag == Tag::Search ? ActionKind::Search : ActionKind::Answer;
        out.payload = el.body;
        return out;
      case Tag::Document:
      case Tag::Warning: return ParsedAction{};
    }
  }
  out.kind = ActionKind::None;
  return out;
}

}  // namespace

InferenceResult run_inference(std::string question_id, const Generator& generator,
                              Helper& helper, const InferenceConfig& config) {
  config.check();
  const auto grammar = TagGrammar::for_mode(config.oracle_mode);
  InferenceResult result;
  auto& traj = result.trajectory;
  traj.question_id = std::move(question_id);
  traj.truncated = true;

  for (int l = 0; l < config.max_actions(); ++l) {
    const GeneratedAction action = generator(traj, helper);
    ++result.actions;
    ParsedAction parsed = parse_action(action.text, grammar);
    if (parsed.kind == ActionKind::Malformed ||
        (parsed.kind == ActionKind::None && !action.end_of_sequence)) {
      // No course-correction message: the trajectory just ends.
      result.malformed = true;
      return result;
    }
    for (auto& s : parsed.thinks) traj.steps.push_back(std::move(s));

    if (parsed.kind == ActionKind::Search) {
      traj.steps.emplace_back(Search{parsed.payload});
      if (!config.search_enabled) {
        result.abstained = true;
        return result;
      }
      if (l < config.max_searches) {
        auto docs = helper.respond(parsed.payload);
        if (docs.empty()) throw std::runtime_error("helper returned no documents");
        traj.steps.emplace_back(Documents{std::move(docs)});
      } else {
        traj.steps.emplace_back(Warning{std::string(kSearchLimitMessage)});
      }
    } else if (parsed.kind == ActionKind::Answer) {
      traj.steps.emplace_back(Answer{parsed.payload});
      traj.truncated = false;
      return result;
    } else {
      return result;  // end of sequence without an answer
    }
  }
  return result;
}

}  // namespace helpseek

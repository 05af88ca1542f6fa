#pragma once

// Prompt designs for LLM bandit agents: configuration codes, rendering of
// the system/user messages, and parsing of <Answer> tagged responses.
//
// Paragraphs in rendered messages are separated by exactly one blank line
// and history entries by single newlines. A raw history with no entries
// contributes no paragraph at all.

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "armlab/agents.hpp"
#include "armlab/bandit.hpp"
#include "armlab/errors.hpp"
#include "armlab/rng.hpp"

namespace armlab {

enum class Scenario { kButtons, kAdverts };
enum class Framing { kNeutral, kSuggestive };
enum class HistoryMode { kRaw, kSummarized };
enum class CotMode { kNone, kCot, kReinforcedCot };
enum class OutputMode { kArmTemp0, kArmTemp1, kDistribution };

/// One prompt design plus its temperature, named by a 5-letter code.
struct PromptConfig {
  Scenario scenario = Scenario::kButtons;
  Framing framing = Framing::kNeutral;
  HistoryMode history = HistoryMode::kRaw;
  CotMode cot = CotMode::kNone;
  OutputMode output = OutputMode::kArmTemp0;

  bool wants_distribution() const { return output == OutputMode::kDistribution; }
  bool uses_cot() const { return cot != CotMode::kNone; }
  // Distribution answers are always requested at temperature 0.
  double temperature() const { return output == OutputMode::kArmTemp1 ? 1.0 : 0.0; }

  bool operator==(const PromptConfig&) const = default;
};

/// UTF-8 for C with combining tilde, the reinforced-CoT letter.
inline constexpr std::string_view kReinforcedCotLetter = "C\xCC\x83";

inline std::string encode_config(const PromptConfig& c) {
  std::string code;
  code += c.scenario == Scenario::kButtons ? 'B' : 'A';
  code += c.framing == Framing::kNeutral ? 'N' : 'S';
  code += c.history == HistoryMode::kRaw ? 'R' : 'S';
  switch (c.cot) {
    case CotMode::kNone:
      code += 'N';
      break;
    case CotMode::kCot:
      code += 'C';
      break;
    case CotMode::kReinforcedCot:
      code += kReinforcedCotLetter;
      break;
  }
  switch (c.output) {
    case OutputMode::kArmTemp0:
      code += '0';
      break;
    case OutputMode::kArmTemp1:
      code += '1';
      break;
    case OutputMode::kDistribution:
      code += 'D';
      break;
  }
  return code;
}

/// ASCII spelling of a code, writing reinforced CoT as 'R' in position 4.
inline std::string encode_config_ascii(const PromptConfig& c) {
  std::string code = encode_config(c);
  if (auto pos = code.find(kReinforcedCotLetter); pos != std::string::npos) {
    code.replace(pos, kReinforcedCotLetter.size(), "R");
  }
  return code;
}

/// Parses codes such as "BNRN0" or "BSSC̃0". Position 4 also accepts
/// 'R' as an ASCII alias for reinforced CoT.
inline PromptConfig parse_config_code(std::string_view code) {
  std::string letters;
  std::string_view rest = code;
  std::vector<std::string> symbols;
  while (!rest.empty()) {
    if (rest.substr(0, kReinforcedCotLetter.size()) == kReinforcedCotLetter) {
      symbols.emplace_back(kReinforcedCotLetter);
      rest.remove_prefix(kReinforcedCotLetter.size());
    } else {
      symbols.emplace_back(1, rest.front());
      rest.remove_prefix(1);
    }
  }
  const std::string quoted = "'" + std::string(code) + "'";
  if (symbols.size() != 5) throw ConfigError("config code must have 5 letters: " + quoted);
  auto bad = [&](int pos) {
    return ConfigError("invalid letter '" + symbols[pos] + "' at position " +
                       std::to_string(pos + 1) + " of config code " + quoted);
  };

  PromptConfig c;
  if (symbols[0] == "B") c.scenario = Scenario::kButtons;
  else if (symbols[0] == "A") c.scenario = Scenario::kAdverts;
  else throw bad(0);

  if (symbols[1] == "N") c.framing = Framing::kNeutral;
  else if (symbols[1] == "S") c.framing = Framing::kSuggestive;
  else throw bad(1);

  if (symbols[2] == "R") c.history = HistoryMode::kRaw;
  else if (symbols[2] == "S") c.history = HistoryMode::kSummarized;
  else throw bad(2);

  if (symbols[3] == "N") c.cot = CotMode::kNone;
  else if (symbols[3] == "C") c.cot = CotMode::kCot;
  else if (symbols[3] == kReinforcedCotLetter || symbols[3] == "R") c.cot = CotMode::kReinforcedCot;
  else throw bad(3);

  if (symbols[4] == "0") c.output = OutputMode::kArmTemp0;
  else if (symbols[4] == "1") c.output = OutputMode::kArmTemp1;
  else if (symbols[4] == "D") c.output = OutputMode::kDistribution;
  else throw bad(4);
  return c;
}

/// Every valid configuration: 72 codes, 48 of them without reinforced CoT.
inline std::vector<PromptConfig> all_configs() {
  std::vector<PromptConfig> out;
  for (auto s : {Scenario::kButtons, Scenario::kAdverts})
    for (auto f : {Framing::kNeutral, Framing::kSuggestive})
      for (auto h : {HistoryMode::kRaw, HistoryMode::kSummarized})
        for (auto cot : {CotMode::kNone, CotMode::kCot, CotMode::kReinforcedCot})
          for (auto o : {OutputMode::kArmTemp0, OutputMode::kArmTemp1, OutputMode::kDistribution})
            out.push_back({s, f, h, cot, o});
  return out;
}

/// Reinforced CoT was only used with GPT-4 models. Returns a warning for
/// other model families; the configuration still runs.
inline std::optional<std::string> check_model_support(const PromptConfig& c,
                                                      std::string_view model) {
  if (c.cot != CotMode::kReinforcedCot) return std::nullopt;
  std::string lower(model);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (lower.find("gpt-4") != std::string::npos || lower.find("mock") != std::string::npos) {
    return std::nullopt;
  }
  return "reinforced CoT (" + encode_config(c) + ") is not a supported design for model '" +
         std::string(model) + "'";
}

inline std::vector<std::string> arm_labels(Scenario scenario, std::size_t num_arms) {
  static const std::array<const char*, 10> kColors = {
      "blue", "green", "red", "yellow", "purple", "orange", "pink", "brown", "black", "white"};
  std::vector<std::string> labels;
  if (scenario == Scenario::kButtons) {
    if (num_arms > kColors.size()) {
      throw ConfigError("buttons scenario supports at most " + std::to_string(kColors.size()) +
                        " arms");
    }
    labels.assign(kColors.begin(), kColors.begin() + static_cast<std::ptrdiff_t>(num_arms));
  } else {
    if (num_arms > 26) throw ConfigError("adverts scenario supports at most 26 arms");
    for (std::size_t i = 0; i < num_arms; ++i) labels.emplace_back(1, static_cast<char>('A' + i));
  }
  return labels;
}

struct ChatPrompt {
  std::string system_text;
  std::string user_text;

  bool operator==(const ChatPrompt&) const = default;
};

namespace detail {

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

inline std::string format_rate(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

// "blue:n1,green:n2,..." or "A:n1,B:n2,..."
inline std::string distribution_template(const std::vector<std::string>& labels) {
  std::vector<std::string> parts;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    parts.push_back(labels[i] + ":n" + std::to_string(i + 1));
  }
  return join(parts, ",");
}

constexpr std::string_view kThinkStepByStep =
    "Let's think step by step to make sure we make a good choice.";

inline std::vector<ArmStats> summarize(const History& history, std::size_t num_arms) {
  std::vector<ArmStats> stats(num_arms);
  for (const Step& s : history) {
    if (s.arm >= num_arms) {
      throw IntegrityError("history references arm " + std::to_string(s.arm) +
                           " but the instance has " + std::to_string(num_arms) + " arms");
    }
    ++stats[s.arm].pulls;
    stats[s.arm].successes += static_cast<std::size_t>(s.reward);
  }
  return stats;
}

inline ChatPrompt render_buttons(const PromptConfig& c, std::size_t k, std::size_t horizon,
                                 const History& history,
                                 const std::vector<std::string>& labels) {
  const std::string list = join(labels, ", ");
  const std::string t = std::to_string(horizon);
  const std::string dist = distribution_template(labels);
  std::vector<std::string> sys;

  sys.push_back(std::string(c.framing == Framing::kSuggestive ? "You are a bandit algorithm in a room"
                                                              : "You are in a room") +
                " with " + std::to_string(k) + " buttons labeled " + list +
                ". Each button is associated with a Bernoulli distribution with a fixed but "
                "unknown mean; the means for the buttons could be different. For each button, "
                "when you press it, you will get a reward that is sampled from the button's "
                "associated distribution. You have " +
                t +
                " time steps and, on each time step, you can choose any button and receive the "
                "reward. Your goal is to maximize the total reward over the " +
                t + " time steps.");

  std::string p2 = "At each time step, I will show you ";
  p2 += c.history == HistoryMode::kSummarized ? "a summary of your past choices and rewards"
                                              : "your past choices and rewards";
  p2 += ". Then you must make the next choice";
  if (c.wants_distribution()) {
    p2 += ". You may output a distribution over the " + std::to_string(k) +
          " buttons formatted EXACTLY like \"" + dist + "\". ";
  } else {
    p2 += ", which must be exactly one of " + list + ". ";
  }
  if (c.uses_cot()) {
    p2 += std::string(kThinkStepByStep) + " You must provide your final answer within the tags ";
  } else {
    p2 += "You must provide your final answer immediately within the tags ";
  }
  if (c.wants_distribution()) {
    p2 += "<Answer>DIST</Answer> where DIST is the distribution in the format specified above";
  } else {
    p2 += "<Answer>COLOR</Answer> where COLOR is one of " + list;
  }
  p2 += c.uses_cot() ? "." : " and with no text explanation.";
  sys.push_back(std::move(p2));

  std::vector<std::string> user;
  const std::string n = std::to_string(history.size());
  if (c.history == HistoryMode::kSummarized) {
    user.push_back("So far you have played " + n +
                   " times with your past choices and rewards summarized as follows:");
    const auto stats = summarize(history, k);
    std::vector<std::string> lines;
    for (std::size_t a = 0; a < k; ++a) {
      std::string line = labels[a] + " button: pressed " + std::to_string(stats[a].pulls) + " times";
      if (stats[a].pulls > 0) line += " with average reward " + format_rate(*stats[a].mean());
      lines.push_back(std::move(line));
    }
    user.push_back(join(lines, "\n"));
  } else {
    user.push_back("So far you have played " + n + " times with the following choices and rewards:");
    summarize(history, k);
    std::vector<std::string> lines;
    for (const Step& s : history) {
      lines.push_back(labels[s.arm] + " button, reward " + std::to_string(s.reward));
    }
    if (!lines.empty()) user.push_back(join(lines, "\n"));
  }
  std::string q = "Which button will you choose next? Remember, YOU MUST provide your final answer "
                  "within the tags ";
  if (c.wants_distribution()) {
    q += "<Answer>DIST</Answer> where DIST is formatted like \"" + dist + "\".";
  } else {
    q += "<Answer>COLOR</Answer> where COLOR is one of " + list + ".";
  }
  if (c.cot == CotMode::kReinforcedCot) q += " " + std::string(kThinkStepByStep);
  user.push_back(std::move(q));
  return {join(sys, "\n\n"), join(user, "\n\n")};
}

inline ChatPrompt render_adverts(const PromptConfig& c, std::size_t k, std::size_t horizon,
                                 const History& history,
                                 const std::vector<std::string>& labels) {
  const std::string list = join(labels, ", ");
  const std::string dist = distribution_template(labels);
  std::vector<std::string> sys;

  sys.push_back("You are recommendation engine that chooses advertisements to display to users "
                "when they visit your webpage. There are " +
                std::to_string(k) + " advertisements you can choose from, named " + list +
                ". When a user visits the webpage you can choose an advertisement to display and "
                "you will observe whether the user clicks on the ad or not. You model this by "
                "assuming that each advertisement has a certain click rate and users click on "
                "advertisements with their corresponding rates.");
  sys.push_back("You have a budget of " + std::to_string(horizon) +
                " users to interact with and your goal is to maximize the total number of clicks "
                "during this process.");
  if (c.framing == Framing::kSuggestive) {
    sys.push_back("A good strategy to optimize for clicks in these situations requires balancing "
                  "exploration and exploitation. You need to explore to try out all of the options "
                  "and find those with high click rates, but you also have to exploit the "
                  "information that you have to accumulate clicks.");
  }
  sys.push_back(c.history == HistoryMode::kSummarized
                    ? "When each user visits the webpage, I will show you a summary of the data you "
                      "have collected so far."
                    : "When each user visits the webpage, I will show you the history of the data "
                      "you have collected so far.");
  if (c.wants_distribution()) {
    sys.push_back("Then you must choose which advertisement to display. You may output a "
                  "distribution over the " +
                  std::to_string(k) + " choices formatted EXACTLY like \"" + dist + "\".");
  } else {
    sys.push_back("Then you must choose which advertisement to display, which must be exactly one "
                  "of " +
                  list + ".");
  }
  std::string answer = c.uses_cot() ? std::string(kThinkStepByStep) +
                                          " Then, you must provide your final answer within the tags "
                                    : std::string("You must provide your final answer immediately "
                                                  "within the tags ");
  if (c.wants_distribution()) {
    answer += "<Answer>DIST</Answer> where DIST is the distribution in the format specified above";
  } else {
    answer += "<Answer>AD</Answer> where AD is one of " + list;
  }
  answer += c.uses_cot() ? "." : " and with no text explanation.";
  sys.push_back(std::move(answer));

  std::vector<std::string> user;
  const std::string n = std::to_string(history.size());
  const auto stats = summarize(history, k);
  std::vector<std::string> lines;
  if (c.history == HistoryMode::kSummarized) {
    user.push_back("So far you have interacted with " + n +
                   " users. Here is a summary of the data you have collected:");
    for (std::size_t a = 0; a < k; ++a) {
      if (stats[a].pulls == 0) {
        lines.push_back("Advertisement " + labels[a] + " has not been shown");
      } else {
        lines.push_back("Advertisement " + labels[a] + " was shown to " +
                        std::to_string(stats[a].pulls) +
                        " users with an estimated click rate of " + format_rate(*stats[a].mean()));
      }
    }
  } else {
    user.push_back("So far you have interacted with " + n +
                   " users. Here is the data you have collected:");
    for (const Step& s : history) {
      lines.push_back("Advertisement " + labels[s.arm] + " was shown and the user " +
                      (s.reward ? "clicked" : "did not click"));
    }
  }
  if (!lines.empty()) user.push_back(join(lines, "\n"));
  std::string q = "Which advertisement will you choose next? Remember, YOU MUST provide your final "
                  "answer within the tags ";
  if (c.wants_distribution()) {
    q += "<Answer>DIST</Answer> where DIST is formatted like \"" + dist + "\".";
  } else {
    q += "<Answer>AD</Answer> where AD is one of " + list + ".";
  }
  if (c.cot == CotMode::kReinforcedCot) q += " " + std::string(kThinkStepByStep);
  user.push_back(std::move(q));
  return {join(sys, "\n\n"), join(user, "\n\n")};
}

}  // namespace detail

/// Renders the system and user messages for the next decision. Pure in its
/// arguments; arms are labelled in presented order.
inline ChatPrompt render_prompt(const PromptConfig& config, const MabInstance& instance,
                                const History& history) {
  if (history.size() >= instance.horizon) {
    throw UsageError("history already spans the full horizon");
  }
  const std::size_t k = instance.num_arms();
  const auto labels = arm_labels(config.scenario, k);
  if (config.scenario == Scenario::kButtons) {
    return detail::render_buttons(config, k, instance.horizon, history, labels);
  }
  return detail::render_adverts(config, k, instance.horizon, history, labels);
}

// ---------------------------------------------------------------------------
// Response parsing

enum class ParseErrorKind {
  kNoAnswerTag,
  kEmptyAnswer,
  kUnknownLabel,
  kMalformedEntry,
  kMissingLabel,
  kDuplicateLabel,
  kNegativeWeight,
  kZeroWeights,
};

inline const char* to_string(ParseErrorKind k) {
  switch (k) {
    case ParseErrorKind::kNoAnswerTag:
      return "no_answer_tag";
    case ParseErrorKind::kEmptyAnswer:
      return "empty_answer";
    case ParseErrorKind::kUnknownLabel:
      return "unknown_label";
    case ParseErrorKind::kMalformedEntry:
      return "malformed_entry";
    case ParseErrorKind::kMissingLabel:
      return "missing_label";
    case ParseErrorKind::kDuplicateLabel:
      return "duplicate_label";
    case ParseErrorKind::kNegativeWeight:
      return "negative_weight";
    case ParseErrorKind::kZeroWeights:
      return "zero_weights";
  }
  return "unknown";
}

struct ParseError {
  ParseErrorKind kind;
  std::string detail;
};

/// A parsed answer: either a single arm, or normalized weights over all arms.
struct Decision {
  std::optional<ArmIndex> arm;
  std::vector<double> distribution;
  std::string raw_text;
};

using ParseResult = std::variant<Decision, ParseError>;

namespace detail {

inline std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return out;
}

inline std::string_view trim(std::string_view s) {
  auto issp = [](char ch) { return std::isspace(static_cast<unsigned char>(ch)) != 0; };
  while (!s.empty() && issp(s.front())) s.remove_prefix(1);
  while (!s.empty() && issp(s.back())) s.remove_suffix(1);
  return s;
}

inline std::optional<ArmIndex> find_label(std::string_view token,
                                          const std::vector<std::string>& labels) {
  const std::string t = lower(trim(token));
  for (ArmIndex a = 0; a < labels.size(); ++a) {
    if (lower(labels[a]) == t) return a;
  }
  return std::nullopt;
}

}  // namespace detail

/// Extracts the last <Answer>...</Answer> span and interprets it according
/// to the configured output mode. Never throws on malformed text.
inline ParseResult parse_response(const PromptConfig& config, std::string_view text,
                                  const std::vector<std::string>& labels) {
  const std::string low = detail::lower(text);
  const auto close = low.rfind("</answer>");
  if (close == std::string::npos) return ParseError{ParseErrorKind::kNoAnswerTag, "no </Answer> tag"};
  const auto open = low.rfind("<answer>", close);
  if (open == std::string::npos) return ParseError{ParseErrorKind::kNoAnswerTag, "no <Answer> tag"};
  const std::string_view body =
      detail::trim(text.substr(open + 8, close - (open + 8)));
  if (body.empty()) return ParseError{ParseErrorKind::kEmptyAnswer, "empty answer"};

  Decision d;
  d.raw_text = std::string(text);
  if (!config.wants_distribution()) {
    auto arm = detail::find_label(body, labels);
    if (!arm) return ParseError{ParseErrorKind::kUnknownLabel, std::string(body)};
    d.arm = arm;
    return d;
  }

  std::vector<std::optional<double>> weights(labels.size());
  std::string_view rest = body;
  while (true) {
    const auto comma = rest.find(',');
    const std::string_view entry = detail::trim(rest.substr(0, comma));
    const auto colon = entry.find(':');
    if (colon == std::string_view::npos) {
      return ParseError{ParseErrorKind::kMalformedEntry, std::string(entry)};
    }
    auto arm = detail::find_label(entry.substr(0, colon), labels);
    if (!arm) return ParseError{ParseErrorKind::kUnknownLabel, std::string(entry.substr(0, colon))};
    const std::string_view num = detail::trim(entry.substr(colon + 1));
    double w = 0.0;
    const auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), w);
    if (num.empty() || ec != std::errc() || ptr != num.data() + num.size() || !std::isfinite(w)) {
      return ParseError{ParseErrorKind::kMalformedEntry, std::string(entry)};
    }
    if (w < 0.0) return ParseError{ParseErrorKind::kNegativeWeight, std::string(entry)};
    if (weights[*arm]) return ParseError{ParseErrorKind::kDuplicateLabel, labels[*arm]};
    weights[*arm] = w;
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  double total = 0.0;
  for (ArmIndex a = 0; a < labels.size(); ++a) {
    if (!weights[a]) return ParseError{ParseErrorKind::kMissingLabel, labels[a]};
    total += *weights[a];
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    return ParseError{ParseErrorKind::kZeroWeights, std::string(body)};
  }
  d.distribution.reserve(labels.size());
  for (const auto& w : weights) d.distribution.push_back(*w / total);
  return d;
}

/// Turns a decision into an arm; distributions are sampled with `rng`.
inline ArmIndex decide(const Decision& decision, SeededRng& rng) {
  if (decision.arm) return *decision.arm;
  if (decision.distribution.empty()) throw UsageError("decision carries neither arm nor distribution");
  const double u = rng.uniform();
  double cum = 0.0;
  ArmIndex last_positive = 0;
  for (ArmIndex a = 0; a < decision.distribution.size(); ++a) {
    if (decision.distribution[a] <= 0.0) continue;
    last_positive = a;
    cum += decision.distribution[a];
    if (u < cum) return a;
  }
  return last_positive;
}

}  // namespace armlab

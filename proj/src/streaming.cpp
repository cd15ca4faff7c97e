#include "countmc/streaming.hpp"

#include <algorithm>
#include <cctype>

namespace countmc {

namespace {

bool parse_index(const std::string& text, std::size_t& out) {
  if (text.empty()) return false;
  std::size_t v = 0;
  for (char ch : text) {
    if (!std::isdigit(static_cast<unsigned char>(ch))) return false;
    v = v * 10 + static_cast<std::size_t>(ch - '0');
  }
  out = v;
  return true;
}

double param_value(const ParamRef& ref, const ChainState& state,
                   std::size_t g) {
  switch (ref.family) {
    case ParamFamily::beta_col:
      return state.beta(g, ref.index);
    case ParamFamily::gamma:
      return state.gamma[g];
    case ParamFamily::theta:
      return state.theta[ref.index];
    case ParamFamily::sigma:
      return state.sigma[ref.index];
    case ParamFamily::nu:
      return state.nu;
    case ParamFamily::tau:
      return state.tau;
  }
  return 0.0;
}

}  // namespace

ParamRef parse_param_ref(const std::string& name, std::size_t L) {
  auto bad = [&]() -> ConfigError {
    return ConfigError("unknown parameter name in contrast: '" + name + "'");
  };

  if (name == "nu") return {ParamFamily::nu, 0};
  if (name == "tau") return {ParamFamily::tau, 0};
  if (name == "gamma") return {ParamFamily::gamma, 0};

  const auto open = name.find('[');
  if (open == std::string::npos || name.back() != ']') throw bad();
  const std::string head = name.substr(0, open);
  const std::string inner = name.substr(open + 1, name.size() - open - 2);

  std::size_t idx = 0;
  ParamFamily family;
  if (head == "beta") {
    if (inner.size() < 2 || inner[0] != ',' || !parse_index(inner.substr(1), idx))
      throw bad();
    family = ParamFamily::beta_col;
  } else if (head == "theta" || head == "sigma") {
    if (!parse_index(inner, idx)) throw bad();
    family = head == "theta" ? ParamFamily::theta : ParamFamily::sigma;
  } else if (head == "gamma") {
    throw ConfigError("gamma takes no index in contrasts; write 'gamma'");
  } else {
    throw bad();
  }
  if (idx < 1 || idx > L)
    throw ConfigError("contrast index out of range in '" + name + "' (L=" +
                      std::to_string(L) + ")");
  return {family, idx - 1};
}

void ContrastSpec::finalize() {
  if (terms.empty())
    throw ConfigError("contrast '" + id + "' has no terms");
  per_gene = false;
  for (const auto& term : terms) {
    if (term.coeffs.empty())
      throw ConfigError("contrast '" + id + "' has a term with no coefficients");
    for (const auto& [ref, coef] : term.coeffs) {
      (void)coef;
      if (ref.per_gene()) per_gene = true;
    }
  }
}

void ContrastAccumulator::update(const ChainState& state) {
  ++count_;
  const double m = static_cast<double>(count_);
  const std::size_t n = prob_.size();
  for (std::size_t g = 0; g < n; ++g) {
    bool all = true;
    for (const auto& term : spec_.terms) {
      double lhs = 0.0;
      for (const auto& [ref, coef] : term.coeffs)
        lhs += coef * param_value(ref, state, g);
      if (!(lhs > term.threshold)) {
        all = false;
        break;
      }
    }
    const double ind = all ? 1.0 : 0.0;
    prob_[g] += (ind - prob_[g]) / m;
  }
}

double disjunction_combine(double p1, double p2, double p12) {
  return std::clamp(p1 + p2 - p12, 0.0, 1.0);
}

}  // namespace countmc

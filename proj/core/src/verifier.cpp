#include "sort3lab/verifier.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include <json.hpp>

#include "sort3lab/rng.hpp"

namespace sort3lab::verify {

using nlohmann::json;

const std::array<Pattern, 13>& patterns() {
  static const std::array<Pattern, 13> table = [] {
    std::vector<Triple> reps;
    for (std::int32_t a = 0; a < 3; ++a)
      for (std::int32_t b = 0; b < 3; ++b)
        for (std::int32_t c = 0; c < 3; ++c) {
          Triple rep = representative_of({a, b, c}, Ordering::signed32);
          if (std::find(reps.begin(), reps.end(), rep) == reps.end()) reps.push_back(rep);
        }
    std::sort(reps.begin(), reps.end());
    std::array<Pattern, 13> out{};
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = {static_cast<int>(i), reps[i]};
    return out;
  }();
  return table;
}

Triple representative_of(const Triple& t, Ordering ordering) {
  Triple rep{};
  for (int i = 0; i < 3; ++i) {
    // Dense rank: number of distinct values strictly less than t[i].
    std::int32_t rank = 0;
    for (int j = 0; j < 3; ++j) {
      if (!kernels::less(t[static_cast<std::size_t>(j)], t[static_cast<std::size_t>(i)], ordering))
        continue;
      bool duplicate = false;
      for (int k = 0; k < j; ++k)
        if (t[static_cast<std::size_t>(k)] == t[static_cast<std::size_t>(j)]) duplicate = true;
      if (!duplicate) ++rank;
    }
    rep[static_cast<std::size_t>(i)] = rank;
  }
  return rep;
}

int classify(const Triple& t, Ordering ordering) {
  Triple rep = representative_of(t, ordering);
  for (const Pattern& p : patterns())
    if (p.representative == rep) return p.index;
  return -1;  // unreachable: every triple rank-compresses to one of the 13
}

Domain Domain::make_patterns() { return Domain{}; }

Domain Domain::make_grid(std::int32_t lo, std::int32_t hi) {
  Domain d;
  d.kind = Kind::grid;
  d.lo = lo;
  d.hi = hi;
  return d;
}

Domain Domain::make_random(std::uint64_t seed, std::uint64_t n) {
  Domain d;
  d.kind = Kind::random;
  d.seed = seed;
  d.count = n;
  return d;
}

Domain Domain::make_extremes() {
  Domain d;
  d.kind = Kind::extremes;
  return d;
}

std::string Domain::describe() const {
  switch (kind) {
    case Kind::patterns: return "patterns";
    case Kind::grid: return "grid:" + std::to_string(lo) + ":" + std::to_string(hi);
    case Kind::random: return "random:" + std::to_string(seed) + ":" + std::to_string(count);
    case Kind::extremes: return "extremes";
  }
  return "?";
}

std::optional<Domain> Domain::parse(std::string_view text) {
  auto field = [&](std::size_t i) -> std::optional<std::string_view> {
    std::size_t start = 0;
    for (std::size_t n = 0; n < i; ++n) {
      start = text.find(':', start);
      if (start == std::string_view::npos) return std::nullopt;
      ++start;
    }
    std::size_t end = text.find(':', start);
    return text.substr(start, end == std::string_view::npos ? end : end - start);
  };
  auto to_i64 = [](std::string_view s) -> std::optional<std::int64_t> {
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
    return v;
  };

  if (text == "patterns") return make_patterns();
  if (text == "extremes") return make_extremes();
  if (text.rfind("grid:", 0) == 0) {
    auto lo = field(1), hi = field(2);
    if (!lo || !hi) return std::nullopt;
    auto l = to_i64(*lo), h = to_i64(*hi);
    if (!l || !h || *l > *h || *l < INT32_MIN || *h > INT32_MAX) return std::nullopt;
    return make_grid(static_cast<std::int32_t>(*l), static_cast<std::int32_t>(*h));
  }
  if (text.rfind("random:", 0) == 0) {
    auto seed = field(1), n = field(2);
    if (!seed || !n) return std::nullopt;
    auto s = to_i64(*seed), c = to_i64(*n);
    if (!s || !c || *c < 1) return std::nullopt;
    return make_random(static_cast<std::uint64_t>(*s), static_cast<std::uint64_t>(*c));
  }
  return std::nullopt;
}

std::vector<Triple> Domain::cases() const {
  std::vector<Triple> out;
  switch (kind) {
    case Kind::patterns:
      for (const Pattern& p : patterns()) out.push_back(p.representative);
      break;
    case Kind::grid:
      for (std::int64_t a = lo; a <= hi; ++a)
        for (std::int64_t b = lo; b <= hi; ++b)
          for (std::int64_t c = lo; c <= hi; ++c)
            out.push_back({static_cast<std::int32_t>(a), static_cast<std::int32_t>(b),
                           static_cast<std::int32_t>(c)});
      break;
    case Kind::random: {
      SplitMix64 rng(seed);
      out.reserve(count);
      for (std::uint64_t i = 0; i < count; ++i)
        out.push_back({rng.next_i32(), rng.next_i32(), rng.next_i32()});
      break;
    }
    case Kind::extremes: {
      // Catches width and overflow errors that small benchmark values cannot.
      const std::int32_t values[] = {INT32_MIN, INT32_MIN + 1, -1, 0, 1, INT32_MAX - 1, INT32_MAX};
      for (std::int32_t a : values)
        for (std::int32_t b : values)
          for (std::int32_t c : values) out.push_back({a, b, c});
      break;
    }
  }
  return out;
}

Subject kernel_subject(const kernels::Kernel& kernel, Ordering ordering) {
  Subject s;
  s.name = std::string(kernel.name);
  auto fn = kernel.fn;
  s.apply = [fn, ordering](const Triple& in, std::string&) -> std::optional<Triple> {
    Triple out = in;
    fn(out.data(), ordering);
    return out;
  };
  return s;
}

Subject program_subject(std::string name, const isa::Program& program, std::uint64_t fuel) {
  Subject s;
  s.name = std::move(name);
  s.apply = [program, fuel](const Triple& in, std::string& fault) -> std::optional<Triple> {
    isa::RunResult r = isa::run(program, in, fuel);
    if (r.reason != isa::HaltReason::completed) {
      fault = std::string(isa::halt_reason_name(r.reason));
      if (!r.fault.empty()) fault += ": " + r.fault;
      return std::nullopt;
    }
    return Triple{r.output[0], r.output[1], r.output[2]};
  };
  return s;
}

VerifyReport verify_sorter(const Subject& subject, const Domain& domain, Ordering ordering) {
  VerifyReport report;
  report.subject = subject.name;
  report.domain = domain.describe();
  report.ordering = std::string(kernels::ordering_name(ordering));

  for (const Triple& input : domain.cases()) {
    ++report.cases;
    Triple expected = input;
    kernels::oracle_sort3(expected.data(), ordering);

    std::string fault;
    std::optional<Triple> actual = subject.apply(input, fault);

    std::string reason;
    if (!actual) {
      reason = fault.empty() ? "execution failure" : fault;
    } else if (!std::is_permutation(actual->begin(), actual->end(), input.begin())) {
      // Checked independently of the value comparison.
      reason = "not a permutation of input";
    } else if (*actual != expected) {
      reason = "mismatch";
    }
    if (reason.empty()) continue;

    ++report.failures_total;
    if (report.failures.size() < kMaxRecordedFailures)
      report.failures.push_back({input, expected, actual.value_or(Triple{}), reason});
  }
  return report;
}

VerifyReport verify_sorter(std::string_view kernel_name, const Domain& domain, Ordering ordering) {
  const kernels::Kernel* kernel = kernels::find_kernel(kernel_name);
  if (!kernel) throw std::invalid_argument("unknown kernel: " + std::string(kernel_name));
  return verify_sorter(kernel_subject(*kernel, ordering), domain, ordering);
}

VerifyReport verify_sorter(const isa::Program& program, std::string_view name,
                           const Domain& domain, Ordering ordering, std::uint64_t fuel) {
  return verify_sorter(program_subject(std::string(name), program, fuel), domain, ordering);
}

std::string VerifyReport::to_json() const {
  json j;
  j["subject"] = subject;
  j["domain"] = domain;
  j["ordering"] = ordering;
  j["cases"] = cases;
  j["failures_total"] = failures_total;
  j["failures"] = json::array();
  for (const Failure& f : failures) {
    j["failures"].push_back({{"input", f.input},
                             {"expected", f.expected},
                             {"actual", f.actual},
                             {"reason", f.reason}});
  }
  j["verdict"] = pass() ? "pass" : "fail";
  return j.dump(2);
}

std::string VerifyReport::to_text() const {
  std::ostringstream out;
  out << "subject=" << subject << " domain=" << domain << " ordering=" << ordering
      << " cases=" << cases << " failures=" << failures_total
      << " verdict=" << (pass() ? "pass" : "fail") << "\n";
  auto triple = [](const Triple& t) {
    return "(" + std::to_string(t[0]) + "," + std::to_string(t[1]) + "," + std::to_string(t[2]) +
           ")";
  };
  for (const Failure& f : failures) {
    out << "  input=" << triple(f.input) << " expected=" << triple(f.expected)
        << " actual=" << triple(f.actual) << " reason=" << f.reason << "\n";
  }
  if (failures_total > failures.size())
    out << "  ... " << (failures_total - failures.size()) << " more failures\n";
  return out.str();
}

}  // namespace sort3lab::verify

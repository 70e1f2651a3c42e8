#include "heattrace/symbol_engine.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>

namespace heattrace::symbols {

Rational::Rational(long long n, long long d) {
  require(d != 0, "Rational: zero denominator");
  if (d < 0) {
    n = -n;
    d = -d;
  }
  long long g = std::gcd(n < 0 ? -n : n, d);
  if (g > 1) {
    n /= g;
    d /= g;
  }
  num = n;
  den = (n == 0) ? 1 : d;
}

Rational Rational::operator*(const Rational& o) const {
  return Rational(num * o.num, den * o.den);
}

Rational Rational::operator+(const Rational& o) const {
  return Rational(num * o.den + o.num * den, den * o.den);
}

std::string Rational::str() const {
  std::ostringstream os;
  os << num;
  if (den != 1) os << '/' << den;
  return os.str();
}

namespace {

const char* atom_name(Atom a) {
  switch (a) {
    case Atom::PrincipalFull: return "u2";
    case Atom::PrincipalXi: return "ubar";
    case Atom::FirstXi: return "vbar";
    case Atom::First: return "v";
    case Atom::Zeroth: return "w";
    case Atom::QuadForm: return "H";
    case Atom::ScalarU: return "u";
  }
  return "?";
}

int implicit_xi(Atom a) {
  switch (a) {
    case Atom::PrincipalXi:
    case Atom::FirstXi: return 1;
    case Atom::QuadForm: return 2;
    default: return 0;
  }
}

}  // namespace

int xi_degree(const Term& t) {
  int deg = static_cast<int>(t.xi.size());
  for (const auto& s : t.slots) deg += implicit_xi(s.atom);
  return deg;
}

std::vector<Term> expand_volterra_order1() {
  std::vector<Term> out;
  auto make = [](Rational c, std::vector<Slot> slots, int next) {
    Term t;
    t.coeff = c;
    t.slots = std::move(slots);
    t.next_id = next;
    return t;
  };
  // Non-principal part of the resolvent expansion (one insertion):
  //   + f_1[u^{ab} d_a d_b] + f_1[v^a d_a] + f_1[w]
  out.push_back(make(Rational(1),
                     {Slot{Atom::PrincipalFull, {0, 1}, {}, {0, 1}}}, 2));
  out.push_back(make(Rational(1), {Slot{Atom::First, {0}, {}, {0}}}, 1));
  out.push_back(make(Rational(1), {Slot{Atom::Zeroth, {}, {}, {}}}, 0));
  // Square of the subprincipal insertion K = -i xi_a (v^a + 2 u^{ab} d_b):
  //   f_2[K, K] = -( f_2[vb, vb] + 2 f_2[vb, ub d] + 2 f_2[ub d, vb]
  //                 + 4 f_2[ub d, ub d] )
  out.push_back(make(Rational(-1),
                     {Slot{Atom::FirstXi, {}, {}, {}},
                      Slot{Atom::FirstXi, {}, {}, {}}},
                     0));
  out.push_back(make(Rational(-2),
                     {Slot{Atom::FirstXi, {}, {}, {}},
                      Slot{Atom::PrincipalXi, {0}, {}, {0}}},
                     1));
  out.push_back(make(Rational(-2),
                     {Slot{Atom::PrincipalXi, {0}, {}, {0}},
                      Slot{Atom::FirstXi, {}, {}, {}}},
                     1));
  out.push_back(make(Rational(-4),
                     {Slot{Atom::PrincipalXi, {0}, {}, {0}},
                      Slot{Atom::PrincipalXi, {1}, {}, {1}}},
                     2));
  return out;
}

std::vector<Term> push_derivatives(const Term& t) {
  // Rightmost slot with pending derivatives.
  int i = -1;
  for (int s = t.k() - 1; s >= 0; --s) {
    if (!t.slots[s].pending.empty()) {
      i = s;
      break;
    }
  }
  if (i < 0) return {t};

  Term base = t;
  const int a = base.slots[i].pending.back();
  base.slots[i].pending.pop_back();
  const int k = base.k();

  std::vector<Term> out;
  // Derivative lands on a later slot.
  for (int j = i + 1; j < k; ++j) {
    Term copy = base;
    copy.slots[j].derivs.push_back(a);
    out.push_back(std::move(copy));
  }
  // Quadratic-form insertion after slot j, with a sign flip.
  for (int j = i; j < k; ++j) {
    Term copy = base;
    copy.coeff = -copy.coeff;
    copy.slots.insert(copy.slots.begin() + j + 1,
                      Slot{Atom::QuadForm, {}, {a}, {}});
    out.push_back(std::move(copy));
  }
  return out;
}

std::vector<Term> push_derivatives_all(std::vector<Term> terms) {
  std::vector<Term> done;
  while (!terms.empty()) {
    Term t = std::move(terms.back());
    terms.pop_back();
    bool has_pending = false;
    for (const auto& s : t.slots) has_pending |= !s.pending.empty();
    if (!has_pending) {
      done.push_back(std::move(t));
      continue;
    }
    auto next = push_derivatives(t);
    for (auto& n : next) terms.push_back(std::move(n));
  }
  return merge_terms(done);
}

namespace {

// Index groups whose two entries may be emitted in either order.
struct FlipGroup {
  bool in_factor;
  int idx;      // slot or factor position
  int which;    // 0 = upper pair, 1 = deriv pair
};

std::vector<FlipGroup> flip_groups(const Term& t) {
  std::vector<FlipGroup> out;
  for (int s = 0; s < t.k(); ++s) {
    if (t.slots[s].atom == Atom::PrincipalFull &&
        t.slots[s].upper.size() == 2) {
      out.push_back({false, s, 0});
    }
    if (t.slots[s].derivs.size() == 2) out.push_back({false, s, 1});
  }
  for (int f = 0; f < static_cast<int>(t.factors.size()); ++f) {
    out.push_back({true, f, 0});
    if (t.factors[f].derivs.size() == 2) out.push_back({true, f, 1});
  }
  return out;
}

// Emits the term under the given factor permutation and flip choice,
// assigning labels in first-encounter order; optionally rebuilds the
// relabelled term.
std::string encode_with(const Term& t, const std::vector<int>& perm,
                        unsigned mask, const std::vector<FlipGroup>& groups,
                        Term* rebuilt) {
  auto flipped = [&](bool in_factor, int idx, int which) {
    for (size_t g = 0; g < groups.size(); ++g) {
      if (groups[g].in_factor == in_factor && groups[g].idx == idx &&
          groups[g].which == which) {
        return (mask >> g) & 1u;
      }
    }
    return 0u;
  };

  std::map<int, int> label;
  auto map_id = [&](int id) {
    auto it = label.find(id);
    if (it != label.end()) return it->second;
    int next = static_cast<int>(label.size());
    label.emplace(id, next);
    return next;
  };
  auto emit_list = [&](std::ostringstream& os, const std::vector<int>& ids,
                       bool flip, std::vector<int>* store) {
    std::vector<int> ordered = ids;
    if (flip && ordered.size() == 2) std::swap(ordered[0], ordered[1]);
    for (size_t i = 0; i < ordered.size(); ++i) {
      int lbl = map_id(ordered[i]);
      os << (i ? "," : "") << lbl;
      if (store) store->push_back(lbl);
    }
  };

  std::ostringstream os;
  Term nt;
  if (rebuilt) {
    nt.coeff = t.coeff;
    nt.next_id = 0;
  }
  for (int s = 0; s < t.k(); ++s) {
    const Slot& slot = t.slots[s];
    os << '|' << atom_name(slot.atom) << '(';
    Slot ns;
    ns.atom = slot.atom;
    emit_list(os, slot.upper, flipped(false, s, 0) != 0,
              rebuilt ? &ns.upper : nullptr);
    os << ";";
    emit_list(os, slot.derivs, flipped(false, s, 1) != 0,
              rebuilt ? &ns.derivs : nullptr);
    os << ')';
    if (rebuilt) nt.slots.push_back(std::move(ns));
  }
  for (int fp = 0; fp < static_cast<int>(perm.size()); ++fp) {
    const MetricFactor& f = t.factors[perm[fp]];
    os << "|g(";
    MetricFactor nf;
    std::vector<int> ups;
    std::vector<int> upv{f.upper[0], f.upper[1]};
    emit_list(os, upv, flipped(true, perm[fp], 0) != 0,
              rebuilt ? &ups : nullptr);
    os << ";";
    emit_list(os, f.derivs, flipped(true, perm[fp], 1) != 0,
              rebuilt ? &nf.derivs : nullptr);
    os << ')';
    if (rebuilt) {
      nf.upper = {ups[0], ups[1]};
      nt.factors.push_back(std::move(nf));
    }
  }
  std::vector<int> xi_labels;
  for (int id : t.xi) xi_labels.push_back(map_id(id));
  std::sort(xi_labels.begin(), xi_labels.end());
  os << "|xi(";
  for (size_t i = 0; i < xi_labels.size(); ++i)
    os << (i ? "," : "") << xi_labels[i];
  os << ')';

  if (rebuilt) {
    nt.xi = xi_labels;
    nt.next_id = static_cast<int>(label.size());
    *rebuilt = std::move(nt);
  }
  return os.str();
}

}  // namespace

std::string canonicalize(Term& t) {
  for (const auto& s : t.slots) {
    require(s.pending.empty(),
            "canonicalize: term still carries pending derivatives");
  }
  const auto groups = flip_groups(t);
  require(groups.size() <= 16, "canonicalize: too many symmetric groups");

  std::vector<int> perm(t.factors.size());
  std::iota(perm.begin(), perm.end(), 0);

  std::string best;
  std::vector<int> best_perm;
  unsigned best_mask = 0;
  do {
    for (unsigned mask = 0; mask < (1u << groups.size()); ++mask) {
      std::string enc = encode_with(t, perm, mask, groups, nullptr);
      if (best.empty() || enc < best) {
        best = enc;
        best_perm = perm;
        best_mask = mask;
      }
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  Term canonical;
  encode_with(t, best_perm, best_mask, groups, &canonical);
  t = std::move(canonical);
  return best;
}

std::vector<Term> merge_terms(const std::vector<Term>& terms) {
  std::map<std::string, Term> acc;
  for (const Term& raw : terms) {
    Term t = raw;
    std::string key = canonicalize(t);
    auto it = acc.find(key);
    if (it == acc.end()) {
      acc.emplace(std::move(key), std::move(t));
    } else {
      it->second.coeff = it->second.coeff + t.coeff;
    }
  }
  std::vector<Term> out;
  for (auto& [key, t] : acc) {
    if (!t.coeff.is_zero()) out.push_back(std::move(t));
  }
  return out;
}

std::vector<Term> specialize_scalar_metric(const std::vector<Term>& terms) {
  struct Alt {
    std::vector<MetricFactor> factors;
    Slot slot;
    std::vector<int> xi;
  };

  std::vector<Term> out;
  for (const Term& t : terms) {
    for (const auto& s : t.slots) {
      require(s.pending.empty(),
              "specialize_scalar_metric: push derivatives first");
    }
    int next_id = t.next_id;

    // Per-slot alternatives (Leibniz split of derivatives between the
    // metric factor and the fibre matrix).
    std::vector<std::vector<Alt>> alts(t.k());
    for (int si = 0; si < t.k(); ++si) {
      const Slot& s = t.slots[si];
      auto add_metric_times_u = [&](std::array<int, 2> upper,
                                    std::vector<int> xi_new) {
        const auto& D = s.derivs;
        const int m = static_cast<int>(D.size());
        for (unsigned sub = 0; sub < (1u << m); ++sub) {
          Alt a;
          MetricFactor f;
          f.upper = upper;
          Slot u{Atom::ScalarU, {}, {}, {}};
          for (int b = 0; b < m; ++b) {
            if ((sub >> b) & 1u) {
              f.derivs.push_back(D[b]);
            } else {
              u.derivs.push_back(D[b]);
            }
          }
          a.factors.push_back(std::move(f));
          a.slot = std::move(u);
          a.xi = xi_new;
          alts[si].push_back(std::move(a));
        }
      };

      switch (s.atom) {
        case Atom::PrincipalFull:
          add_metric_times_u({s.upper[0], s.upper[1]}, {});
          break;
        case Atom::PrincipalXi: {
          int mfresh = next_id++;
          add_metric_times_u({mfresh, s.upper[0]}, {mfresh});
          break;
        }
        case Atom::QuadForm: {
          int m1 = next_id++;
          int m2 = next_id++;
          add_metric_times_u({m1, m2}, {m1, m2});
          break;
        }
        case Atom::FirstXi: {
          int mfresh = next_id++;
          Alt a;
          a.slot = Slot{Atom::First, {mfresh}, s.derivs, {}};
          a.xi = {mfresh};
          alts[si].push_back(std::move(a));
          break;
        }
        case Atom::First:
        case Atom::Zeroth:
        case Atom::ScalarU: {
          Alt a;
          a.slot = s;
          alts[si].push_back(std::move(a));
          break;
        }
      }
    }

    // Cartesian product over slots.
    std::vector<int> pick(t.k(), 0);
    while (true) {
      Term nt;
      nt.coeff = t.coeff;
      nt.factors = t.factors;
      nt.xi = t.xi;
      nt.next_id = next_id;
      for (int si = 0; si < t.k(); ++si) {
        const Alt& a = alts[si][pick[si]];
        nt.slots.push_back(a.slot);
        nt.factors.insert(nt.factors.end(), a.factors.begin(),
                          a.factors.end());
        nt.xi.insert(nt.xi.end(), a.xi.begin(), a.xi.end());
      }
      out.push_back(std::move(nt));

      int pos = t.k() - 1;
      while (pos >= 0) {
        if (++pick[pos] < static_cast<int>(alts[pos].size())) break;
        pick[pos] = 0;
        --pos;
      }
      if (pos < 0) break;
    }
  }
  return merge_terms(out);
}

std::string to_string(const Term& t) {
  std::ostringstream os;
  const std::string c = t.coeff.str();
  if (!c.empty() && c[0] != '-') os << '+';
  os << c << " f" << t.k() << '[';
  for (int s = 0; s < t.k(); ++s) {
    const Slot& slot = t.slots[s];
    os << (s ? ", " : "") << atom_name(slot.atom);
    if (!slot.upper.empty()) {
      os << '(';
      for (size_t i = 0; i < slot.upper.size(); ++i)
        os << (i ? "," : "") << 'i' << slot.upper[i];
      os << ')';
    }
    if (!slot.derivs.empty()) {
      os << " d(";
      for (size_t i = 0; i < slot.derivs.size(); ++i)
        os << (i ? "," : "") << 'i' << slot.derivs[i];
      os << ')';
    }
  }
  os << ']';
  for (const auto& f : t.factors) {
    os << " * g(i" << f.upper[0] << ",i" << f.upper[1] << ')';
    if (!f.derivs.empty()) {
      os << " d(";
      for (size_t i = 0; i < f.derivs.size(); ++i)
        os << (i ? "," : "") << 'i' << f.derivs[i];
      os << ')';
    }
  }
  if (!t.xi.empty()) {
    os << " * xi(";
    for (size_t i = 0; i < t.xi.size(); ++i)
      os << (i ? "," : "") << 'i' << t.xi[i];
    os << ')';
  }
  return os.str();
}

std::string to_text(const std::vector<Term>& terms) {
  auto merged = merge_terms(terms);
  std::ostringstream os;
  for (const auto& t : merged) os << to_string(t) << '\n';
  return os.str();
}

std::vector<std::pair<int, int>> count_required_operators(int r) {
  require(r >= 0, "count_required_operators: order must be >= 0");
  if (r == 0) return {{0, 0}};
  std::vector<std::pair<int, int>> out;
  for (int k = r; k <= 4 * r; ++k) out.emplace_back(k, k - r);
  return out;
}

}  // namespace heattrace::symbols

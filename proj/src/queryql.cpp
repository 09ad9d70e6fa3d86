// SPDX-License-Identifier: Apache-2.0

#include "scispace/queryql.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <future>
#include <set>

#include "scispace/metashard.hpp"

namespace scispace {

// --- parser ------------------------------------------------------------------

namespace {

struct Token {
  enum Kind { word, str, number, op_eq, op_gt, op_lt, end } kind;
  std::string text;     // word/str content
  AttributeValue num;   // for number
  size_t pos;
};

class Lexer {
 public:
  explicit Lexer(std::string_view q) : q_(q) {}

  Result<Token> next() {
    while (i_ < q_.size() && std::isspace(static_cast<unsigned char>(q_[i_]))) ++i_;
    const size_t start = i_;
    if (i_ >= q_.size()) return Token{Token::end, "", {}, start};
    const char c = q_[i_];
    if (c == '=') { ++i_; return Token{Token::op_eq, "=", {}, start}; }
    if (c == '>') { ++i_; return Token{Token::op_gt, ">", {}, start}; }
    if (c == '<') { ++i_; return Token{Token::op_lt, "<", {}, start}; }
    if (c == '"') return lex_string(start);
    if (c == '-' || std::isdigit(static_cast<unsigned char>(c))) return lex_number(start);
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return lex_word(start);
    return syntax(start, "unexpected character '" + std::string(1, c) + "'");
  }

  Error syntax(size_t pos, const std::string& what) const {
    return make_error(Err::syntax_error, "at " + std::to_string(pos) + ": " + what);
  }

 private:
  Result<Token> lex_string(size_t start) {
    ++i_;  // opening quote
    std::string out;
    while (i_ < q_.size() && q_[i_] != '"') {
      if (q_[i_] == '\\' && i_ + 1 < q_.size() && (q_[i_ + 1] == '"' || q_[i_ + 1] == '\\')) ++i_;
      out.push_back(q_[i_++]);
    }
    if (i_ >= q_.size()) return syntax(start, "unterminated string");
    ++i_;  // closing quote
    return Token{Token::str, std::move(out), {}, start};
  }

  Result<Token> lex_number(size_t start) {
    size_t j = i_;
    if (q_[j] == '-') ++j;
    const size_t digits_begin = j;
    while (j < q_.size() && std::isdigit(static_cast<unsigned char>(q_[j]))) ++j;
    if (j == digits_begin) return syntax(start, "expected digits");
    bool is_float = false;
    if (j < q_.size() && q_[j] == '.') {
      is_float = true;
      ++j;
      while (j < q_.size() && std::isdigit(static_cast<unsigned char>(q_[j]))) ++j;
    }
    if (j < q_.size() && (q_[j] == 'e' || q_[j] == 'E')) {
      is_float = true;
      ++j;
      if (j < q_.size() && (q_[j] == '+' || q_[j] == '-')) ++j;
      const size_t exp_begin = j;
      while (j < q_.size() && std::isdigit(static_cast<unsigned char>(q_[j]))) ++j;
      if (j == exp_begin) return syntax(start, "expected exponent digits");
    }
    const std::string text(q_.substr(i_, j - i_));
    i_ = j;
    Token t{Token::number, text, {}, start};
    if (is_float) {
      t.num = AttributeValue::of_float(std::strtod(text.c_str(), nullptr));
    } else {
      errno = 0;
      const long long v = std::strtoll(text.c_str(), nullptr, 10);
      if (errno == ERANGE) return syntax(start, "integer out of range");
      t.num = AttributeValue::of_int(v);
    }
    return t;
  }

  Result<Token> lex_word(size_t start) {
    size_t j = i_;
    while (j < q_.size() &&
           (std::isalnum(static_cast<unsigned char>(q_[j])) || q_[j] == '_' || q_[j] == '.' ||
            q_[j] == '-'))
      ++j;
    Token t{Token::word, std::string(q_.substr(i_, j - i_)), {}, start};
    i_ = j;
    return t;
  }

  std::string_view q_;
  size_t i_ = 0;
};

bool keyword_is(const std::string& s, std::string_view kw) {
  if (s.size() != kw.size()) return false;
  for (size_t i = 0; i < s.size(); ++i)
    if (std::tolower(static_cast<unsigned char>(s[i])) != kw[i]) return false;
  return true;
}

}  // namespace

Result<Predicate> parse_query(std::string_view q) {
  Lexer lex(q);
  Predicate pred;
  while (true) {
    QueryClause clause;

    auto name = lex.next();
    if (!name.ok()) return name.error();
    if (name.value().kind == Token::end)
      return lex.syntax(name.value().pos, "expected attribute name");
    if (name.value().kind != Token::word && name.value().kind != Token::str)
      return lex.syntax(name.value().pos, "expected attribute name");
    clause.attribute = name.value().text;

    auto op = lex.next();
    if (!op.ok()) return op.error();
    switch (op.value().kind) {
      case Token::op_eq: clause.op = QueryOp::eq; break;
      case Token::op_gt: clause.op = QueryOp::gt; break;
      case Token::op_lt: clause.op = QueryOp::lt; break;
      case Token::word:
        if (keyword_is(op.value().text, "like")) {
          clause.op = QueryOp::like;
          break;
        }
        [[fallthrough]];
      default:
        return lex.syntax(op.value().pos, "expected operator (=, >, <, like)");
    }

    auto lit = lex.next();
    if (!lit.ok()) return lit.error();
    if (lit.value().kind == Token::str) {
      clause.literal = AttributeValue::of_text(lit.value().text);
    } else if (lit.value().kind == Token::number) {
      clause.literal = lit.value().num;
    } else {
      return lex.syntax(lit.value().pos, "expected literal (number or quoted string)");
    }

    if (clause.op == QueryOp::like && clause.literal.tag != ValueTag::text_val)
      return make_error(Err::type_error, "like expects a quoted string literal");
    if ((clause.op == QueryOp::gt || clause.op == QueryOp::lt) &&
        clause.literal.tag == ValueTag::text_val)
      return make_error(Err::type_error, "ordering expects a numeric literal");

    pred.clauses.push_back(std::move(clause));

    auto sep = lex.next();
    if (!sep.ok()) return sep.error();
    if (sep.value().kind == Token::end) break;
    if (sep.value().kind != Token::word || !keyword_is(sep.value().text, "and"))
      return lex.syntax(sep.value().pos, "expected AND or end of query");
  }
  return pred;
}

// --- executor ----------------------------------------------------------------

Result<QueryResult> execute_query(WorkspaceSession& session, const Predicate& pred) {
  if (pred.clauses.empty()) return make_error(Err::bad_request, "empty predicate");
  const int64_t t0 = steady_now_ms();

  FieldWriter w;
  w.add_string(1, session.collaborator());
  for (const auto& clause : pred.clauses) {
    FieldWriter c;
    c.add_string(1, clause.attribute);
    c.add_u8(2, static_cast<uint8_t>(clause.op));
    c.add_bytes(3, value_to_bytes(clause.literal));
    w.add_bytes(2, c.finish());
  }
  const auto payload = w.finish();

  std::vector<std::future<Result<std::vector<std::string>>>> futures;
  for (uint32_t d = 0; d < session.dtn_count(); ++d) {
    futures.push_back(
        std::async(std::launch::async, [&session, &payload, d]() -> Result<std::vector<std::string>> {
          auto resp = session.client(d).call(MsgType::query, payload);
          if (!resp.ok()) return resp.error();
          std::vector<std::string> paths;
          for (const auto& pb : resp.value().repeated(1))
            paths.emplace_back(pb.begin(), pb.end());
          return paths;
        }));
  }

  std::set<std::string> merged;
  std::optional<Error> first_error;
  for (auto& f : futures) {
    auto r = f.get();
    if (!r.ok()) {
      if (!first_error) first_error = r.error();
      continue;
    }
    for (auto& p : r.value()) merged.insert(std::move(p));
  }
  if (first_error) return *first_error;  // no partial answers

  QueryResult out;
  out.paths.assign(merged.begin(), merged.end());
  out.elapsed_ms = steady_now_ms() - t0;
  return out;
}

// --- oracle ------------------------------------------------------------------

namespace {

// The oracle's own matching code, kept apart from value_matches on purpose:
// two routes to the same semantics.
bool oracle_like(std::string_view pat, std::string_view text) {
  if (pat.empty()) return text.empty();
  if (pat[0] == '%') return oracle_like(pat.substr(1), text) ||
                            (!text.empty() && oracle_like(pat, text.substr(1)));
  if (text.empty()) return false;
  if (pat[0] == '_' || pat[0] == text[0]) return oracle_like(pat.substr(1), text.substr(1));
  return false;
}

bool oracle_matches(QueryOp op, const AttributeValue& literal, const AttributeValue& stored) {
  switch (op) {
    case QueryOp::eq:
      if (stored.tag != literal.tag) return false;
      if (literal.tag == ValueTag::int_val) return stored.i == literal.i;
      if (literal.tag == ValueTag::text_val) return stored.text == literal.text;
      return stored.f == literal.f;
    case QueryOp::gt:
    case QueryOp::lt: {
      if (literal.tag == ValueTag::int_val) {
        if (stored.tag != ValueTag::int_val) return false;
        return op == QueryOp::gt ? stored.i > literal.i : stored.i < literal.i;
      }
      if (literal.tag != ValueTag::float_val) return false;
      double v;
      if (stored.tag == ValueTag::int_val) v = static_cast<double>(stored.i);
      else if (stored.tag == ValueTag::float_val) v = stored.f;
      else return false;
      return op == QueryOp::gt ? v > literal.f : v < literal.f;
    }
    case QueryOp::like:
      return literal.tag == ValueTag::text_val && stored.tag == ValueTag::text_val &&
             oracle_like(literal.text, stored.text);
  }
  return false;
}

}  // namespace

Result<OracleCorpus> OracleCorpus::build(const OracleContext& ctx) {
  OracleCorpus corpus;
  corpus.namespaces_ = ctx.namespaces;
  corpus.namespaces_.push_back(default_namespace());
  corpus.owner_of_ = ctx.owner_of;

  for (const auto& root : ctx.backend_roots) {
    SyncFlagStore flags(root, ctx.flag_mode);
    auto entries = bk_scan_entries(root, "");
    if (!entries.ok()) return entries.error();
    for (const auto& e : entries.value()) {
      if (e.kind != EntryKind::file) continue;
      if (!e.rel_path.ends_with(".sdf")) continue;
      if (std::count(e.rel_path.begin(), e.rel_path.end(), '/') < 1) continue;
      FileEntry fe;
      fe.display = "/" + e.rel_path;
      fe.ns = e.rel_path.substr(0, e.rel_path.find('/'));
      auto flagged = flags.get(e.rel_path);
      if (!flagged.ok()) return flagged.error();
      fe.synced = flagged.value();

      auto bytes = bk_get(root, e.rel_path);
      if (!bytes.ok()) return bytes.error();
      for (auto& t : extract_attributes(fe.display, bytes.value(), ctx.specs,
                                        StatContext{e.size, e.mtime_ms}))
        fe.attrs.emplace_back(std::move(t.attribute), std::move(t.value));
      corpus.files_.push_back(std::move(fe));
    }
  }

  // the journal overrides extraction per (attribute, file), latest tag wins
  for (const auto& tag : ctx.manual_tags) {
    for (auto& fe : corpus.files_) {
      if (fe.display != tag.file) continue;
      auto slot = std::find_if(fe.attrs.begin(), fe.attrs.end(),
                               [&](const auto& a) { return a.first == tag.attribute; });
      if (slot == fe.attrs.end()) fe.attrs.emplace_back(tag.attribute, tag.value);
      else slot->second = tag.value;
    }
  }
  return corpus;
}

std::vector<std::string> OracleCorpus::scan(const Predicate& pred,
                                            const std::string& requester) const {
  std::vector<std::string> out;
  for (const auto& fe : files_) {
    if (!fe.synced) continue;
    auto ns = std::find_if(namespaces_.begin(), namespaces_.end(),
                           [&](const NamespaceTemplate& t) { return t.name == fe.ns; });
    if (ns == namespaces_.end()) continue;
    if (ns->scope == Scope::local) {
      const std::string owner = owner_of_ ? owner_of_(fe.display) : "";
      if (owner != requester) continue;
    }
    bool all = true;
    for (const auto& clause : pred.clauses) {
      auto attr = std::find_if(fe.attrs.begin(), fe.attrs.end(),
                               [&](const auto& a) { return a.first == clause.attribute; });
      if (attr == fe.attrs.end() || !oracle_matches(clause.op, clause.literal, attr->second)) {
        all = false;
        break;
      }
    }
    if (all) out.push_back(fe.display);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Result<std::vector<std::string>> oracle_scan(const OracleContext& ctx, const Predicate& pred,
                                             const std::string& requester) {
  auto corpus = OracleCorpus::build(ctx);
  if (!corpus.ok()) return corpus.error();
  return corpus.value().scan(pred, requester);
}

}  // namespace scispace

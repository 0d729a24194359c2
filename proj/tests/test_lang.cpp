#include <gtest/gtest.h>

#include <limits>

#include "gridarray/lang.hpp"
#include "support/random_programs.hpp"

using namespace gridarray::lang;

namespace {

FuturesOptions opts(int k, std::uint64_t seed, std::int64_t fuel = 100000) {
  FuturesOptions o;
  o.workers = k;
  o.seed = seed;
  o.limits.fuel = fuel;
  return o;
}

Value bound(const FuturesResult& r, const std::string& x) {
  auto it = r.sigma.find(x);
  if (it == r.sigma.end()) return Value::error("unbound");
  if (it->second.k != VK::Oid) return it->second;
  auto m = r.mu.find(it->second.oid);
  return m == r.mu.end() ? Value::error("unsealed") : m->second;
}

}  // namespace

TEST(Parse, Examples) {
  auto c = parse("x = 1 + 2");
  EXPECT_TRUE(same(c, mk::assign("x", mk::binop(Op::add, mk::num(1), mk::num(2)))));
  auto w = parse("while x < 3 do { x = x + 1 }");
  EXPECT_EQ(w->k, CK::While);
  auto f = parse_expr("f(x){x + 1}");
  EXPECT_EQ(f->k, EK::Func);
  EXPECT_EQ(f->params, std::vector<std::string>{"x"});
  EXPECT_EQ(parse_expr("g(1)")->k, EK::Call);
}

TEST(Parse, PrecedenceAndAssociativity) {
  EXPECT_EQ(to_string(parse_expr("1 - 2 - 3 * 4")), "((1 - 2) - (3 * 4))");
  EXPECT_EQ(to_string(parse_expr("not a < b and c or d")), "(((not (a < b)) and c) or d)");
  EXPECT_EQ(to_string(parse_expr("--x")), "(-(-x))");
  EXPECT_TRUE(same(parse_expr("-5"), mk::num(-5)));
  EXPECT_TRUE(same(parse_expr("-(5)"), mk::unop(Op::neg, mk::num(5))));
  EXPECT_EQ(to_string(parse_expr("-(5)")), "(-(5))");
  EXPECT_EQ(to_string(parse_expr("1 - -9223372036854775808")), "(1 - (-9223372036854775808))");
  EXPECT_THROW(parse_expr("-9223372036854775809"), syntax_error);
  EXPECT_EQ(to_string(parse_expr("f(x){x}(1)(2)")), "f(x){x}(1)(2)");
}

TEST(Parse, PositionedErrors) {
  auto at = [](const std::string& src, int line, int col) {
    try {
      parse(src);
      ADD_FAILURE() << src;
    } catch (const syntax_error& e) {
      EXPECT_EQ(e.line, line) << e.what();
      EXPECT_EQ(e.col, col) << e.what();
    }
  };
  at("x = ", 1, 5);
  at("x = 1;\ny = (2", 2, 7);
  at("x = 1 < 2 < 3", 1, 11);
  at("if x then skip", 1, 15);
  at("x = 1 $ 2", 1, 7);
  at("while = 1", 1, 7);
  EXPECT_THROW(parse("x = put(1)"), syntax_error);
  EXPECT_THROW(parse("x = #00ff"), syntax_error);
  EXPECT_NO_THROW(parse("x = R(+)(put(1), #00ff)", true));
}

TEST(Parse, PrintParseFixedPoint) {
  for (std::uint64_t s = 0; s < 300; ++s) {
    gen::Programs g(s);
    CmdP p = g.terminating();
    std::string text = to_string(p);
    CmdP q = parse(text);
    ASSERT_TRUE(same(p, q)) << text;
    EXPECT_EQ(to_string(q), text);
    CmdP t = translate(p);
    ASSERT_TRUE(same(parse(to_string(t), true), t)) << to_string(t);
  }
  for (const char* src : {"x = -5", "x = 1 - (-5)", "{ x = 1; y = 2 }; z = 3", "x = (f)(1)"}) {
    CmdP p = parse(src);
    EXPECT_TRUE(same(parse(to_string(p)), p)) << src;
  }
}

TEST(Serial, Examples) {
  auto s = eval_serial(parse("x = 1 + 2"));
  ASSERT_FALSE(s.bottom);
  EXPECT_EQ(s.vars, (Store{{"x", Value::integer(3)}}));
  for (std::int64_t fuel : {1, 10, 1000}) EXPECT_TRUE(eval_serial(parse("while True do { skip }"), {fuel}).bottom);
  EXPECT_EQ(eval_serial(parse("if 1 < 2 then x = 1 else x = 2")).vars, (Store{{"x", Value::integer(1)}}));
}

TEST(Serial, FuelBoundsLoopIterationsAndCallDepth) {
  auto loop = parse("x = 0; while x < 3 do x = x + 1");
  EXPECT_FALSE(eval_serial(loop, {3}).bottom);
  EXPECT_TRUE(eval_serial(loop, {2}).bottom);
  auto rec = parse("f = f(n){ n + 1 }; y = f(f(f(1)))");
  EXPECT_EQ(eval_serial(rec, {1}).vars.at("y"), Value::integer(4));
  auto deep = parse("g = g(n){ g(n) }; y = g(1)");
  auto s = eval_serial(deep, {50});
  EXPECT_TRUE(s.bottom);
  EXPECT_NE(s.reason.find("depth"), std::string::npos);
}

TEST(Serial, ErrorsReachingStateGiveBottom) {
  auto u = eval_serial(parse("x = y + 1"));
  EXPECT_TRUE(u.bottom);
  EXPECT_NE(u.reason.find("unbound variable y"), std::string::npos);
  EXPECT_TRUE(eval_serial(parse("x = 1 + True")).bottom);
  EXPECT_TRUE(eval_serial(parse("if 1 then skip else skip")).bottom);
  EXPECT_TRUE(eval_serial(parse("f = f(a){a}; x = f(1, 2)")).bottom);
  EXPECT_TRUE(eval_serial(parse("x = 3(1)")).bottom);
  EXPECT_EQ(eval_expr(parse_expr("9223372036854775807 + 1")), Value::integer(std::numeric_limits<std::int64_t>::min()));
  EXPECT_EQ(eval_expr(parse_expr("True == (1 == 1)")), Value::boolean(true));
}

TEST(Serial, FunctionsSeeParamsThenGlobalsAndCloseOverLocals) {
  auto s = eval_serial(parse("k = 10; f = f(a){ a + k }; x = f(1)"));
  EXPECT_EQ(s.vars.at("x"), Value::integer(11));
  // The inner literal captures a, so the returned function is closed.
  auto t = eval_serial(parse("mk = mk(a){ g(b){ a + b } }; h = mk(5); x = h(1)"));
  ASSERT_FALSE(t.bottom) << t.reason;
  EXPECT_EQ(t.vars.at("x"), Value::integer(6));
  EXPECT_EQ(to_string(t.vars.at("h")), "g(b){(5 + b)}");
}

TEST(Translate, Examples) {
  EXPECT_EQ(to_string(translate(parse("x = 1 + 2"))), "x = R(+)(put(1), put(2))");
  EXPECT_TRUE(same(translate(mk::skip()), mk::skip()));
  auto w = translate(parse("while b do skip"));
  EXPECT_TRUE(same(w, mk::while_(mk::get(mk::var("b")), mk::skip())));
  EXPECT_EQ(to_string(translate(parse("f = f(x){ -x }; y = f(3) < 2"))),
            "f = R(f(x){(-x)}); y = R(<)(f(put(3)), put(2))");
  EXPECT_EQ(to_string(translate(parse_expr("-x"))), "R(neg)(x)");
  EXPECT_THROW(translate(parse_expr("get(x)", true)), std::invalid_argument);
}

TEST(Oid, ContentHash) {
  EXPECT_EQ(oid_of(Value::integer(5)), oid_of(Value::integer(5)));
  EXPECT_NE(oid_of(Value::integer(5)), oid_of(Value::boolean(true)));
  std::uint64_t a = oid_of(Value::integer(1));
  EXPECT_NE(oid_of_call("R(f(x){x})", {a}), oid_of_call("R(g(x){x})", {a}));
  EXPECT_EQ(oid_of_call("R(+)", {a, a}), oid_of_call("R(+)", {a, a}));
}

TEST(Futures, Examples) {
  auto r = eval_futures(translate(parse("x = 1 + 2")), opts(1, 0));
  ASSERT_FALSE(r.bottom);
  ASSERT_EQ(r.sigma.at("x").k, VK::Oid);
  EXPECT_EQ(r.mu.at(r.sigma.at("x").oid), Value::integer(3));

  auto g = eval_futures(parse("x = get(put(5))", true), opts(2, 3));
  EXPECT_EQ(g.sigma.at("x"), Value::integer(5));

  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto n = eval_futures(translate(parse("while True do { skip }")), opts(2, seed, 20));
    EXPECT_TRUE(n.bottom);
    EXPECT_TRUE(n.mu_bottom);
    EXPECT_FALSE(n.deadlock);
  }
}

TEST(Futures, MemoizedCallsShareOneEntry) {
  auto r = eval_futures(parse("a = R(+)(put(1), put(2)); b = R(+)(put(1), put(2))", true), opts(4, 7));
  ASSERT_FALSE(r.bottom);
  EXPECT_EQ(r.sigma.at("a"), r.sigma.at("b"));
  EXPECT_EQ(r.mu.size(), 3u);  // 1, 2 and one result
  EXPECT_EQ(r.store_violations, 0u);
}

TEST(Futures, WorkerErrorDrivesBothToBottom) {
  for (int k : {1, 2, 4}) {
    auto v = run_both(parse("x = 1 + True; y = 2"), opts(k, 1));
    EXPECT_TRUE(v.serial.bottom);
    EXPECT_TRUE(v.futures.bottom && v.futures.mu_bottom);
    EXPECT_TRUE(v.equivalent);
  }
}

TEST(Futures, UnsealedGetDeadlocks) {
  auto r = eval_futures(parse("x = get(#0000000000000001)", true), opts(1, 0));
  EXPECT_TRUE(r.deadlock);
  EXPECT_NE(r.reason.find("deadlock"), std::string::npos);
}

TEST(Futures, SeedDeterminesRun) {
  gen::Programs g(11);
  CmdP p = translate(g.terminating());
  auto a = eval_futures(p, opts(4, 5)), b = eval_futures(p, opts(4, 5));
  EXPECT_EQ(a.transitions, b.transitions);
  EXPECT_EQ(a.sigma, b.sigma);
  EXPECT_EQ(a.mu, b.mu);
}

TEST(Equivalence, Examples) {
  SerialState s;
  s.vars = {{"x", Value::integer(3)}};
  FuturesResult f;
  f.sigma = {{"x", Value::object(9)}};
  f.mu = {{9, Value::integer(3)}};
  EXPECT_TRUE(check_equivalence(s, f));
  f.mu[9] = Value::integer(4);
  EXPECT_FALSE(check_equivalence(s, f));
  EXPECT_TRUE(check_equivalence(SerialState{}, FuturesResult{}));
  SerialState bot;
  bot.bottom = true;
  FuturesResult half;
  half.bottom = true;
  EXPECT_FALSE(check_equivalence(bot, half));
  half.mu_bottom = true;
  EXPECT_TRUE(check_equivalence(bot, half));
}

// Serial and futures agree on random terminating programs for every worker count and seed.
TEST(Properties, TranslationPreservesMeaning) {
  for (std::uint64_t s = 0; s < 200; ++s) {
    gen::Programs g(1000 + s);
    CmdP p = g.terminating();
    ASSERT_FALSE(eval_serial(p).bottom) << to_string(p);
    for (int k : {1, 2, 4})
      for (std::uint64_t seed = 0; seed < 3; ++seed) {
        auto v = run_both(p, opts(k, seed));
        ASSERT_TRUE(v.equivalent) << to_string(p) << " k=" << k << " seed=" << seed << " " << v.futures.reason;
        EXPECT_EQ(v.futures.store_violations, 0u);
        EXPECT_EQ(v.futures.channel_violations, 0u);
      }
  }
}

TEST(Properties, GetOfTranslatedExpressionIsSerialValue) {
  for (std::uint64_t s = 0; s < 1000; ++s) {
    gen::Programs g(5000 + s);
    ExprP e = g.closed_expr(s % 2 == 1, 3);
    Value want = eval_expr(e);
    ASSERT_FALSE(want.is_error()) << to_string(e);
    CmdP p = mk::assign("r", mk::get(translate(e)));
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      auto r = eval_futures(p, opts(1 + static_cast<int>(seed % 3), seed));
      ASSERT_FALSE(r.bottom) << to_string(p);
      ASSERT_EQ(r.sigma.at("r"), want) << to_string(p);
    }
  }
}

TEST(Properties, FuelExhaustionIsBottomInBothWorlds) {
  for (std::uint64_t s = 0; s < 60; ++s) {
    gen::Programs g(9000 + s);
    CmdP p = g.nonterminating();
    ASSERT_TRUE(eval_serial(p, {40}).bottom);
    for (int k : {1, 2, 4})
      for (std::uint64_t seed = 0; seed < 3; ++seed) {
        auto v = run_both(p, opts(k, seed, 40));
        EXPECT_TRUE(v.futures.bottom && v.futures.mu_bottom) << to_string(p);
        EXPECT_TRUE(v.equivalent);
      }
  }
}

TEST(Properties, BoundVariablesAreReadableThroughStore) {
  gen::Programs g(77);
  CmdP p = g.terminating();
  auto v = run_both(p, opts(2, 1));
  ASSERT_TRUE(v.equivalent);
  for (const auto& [x, val] : v.serial.vars) {
    if (val.k == VK::Func) continue;
    EXPECT_EQ(bound(v.futures, x), val) << x;
  }
}

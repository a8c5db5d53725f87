#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <limits>

#include "drbsde/error.hpp"
#include "drbsde/report.hpp"

using namespace drbsde;

TEST(Report, FormatNumber) {
  EXPECT_EQ(format_number(0.1), "0.10000000000000001");
  EXPECT_EQ(format_number(5.0), "5");
  EXPECT_EQ(format_number(-2.5e-13), "-2.4999999999999999e-13");
  EXPECT_EQ(format_number(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(format_number(-std::numeric_limits<double>::infinity()), "-inf");
  EXPECT_EQ(format_number(std::nan("")), "nan");
}

TEST(Report, FormatNumberRoundTrips) {
  for (double v : {1.0 / 3.0, M_PI, 1e-300, 123456789.123456789, -7.25e17}) {
    const std::string s = format_number(v);
    EXPECT_EQ(std::strtod(s.c_str(), nullptr), v) << s;
  }
}

TEST(Report, CheckObserve) {
  CheckReport r("x <= 1", 1e-12);
  r.observe(-0.5, Node{1, 0});
  EXPECT_TRUE(r.passed());
  EXPECT_EQ(r.checked(), 1u);
  r.observe(0.25, Node{2, 1});
  EXPECT_FALSE(r.passed());
  EXPECT_DOUBLE_EQ(r.worst(), 0.25);
  ASSERT_TRUE(r.violation().has_value());
  EXPECT_EQ(r.violation()->node, (Node{2, 1}));
  EXPECT_NE(r.summary().find("FAIL"), std::string::npos);
}

TEST(Report, NanFails) {
  CheckReport r("finite", 0.0);
  r.observe(std::nan(""), Node{0, 0});
  EXPECT_FALSE(r.passed());
}

TEST(Report, Merge) {
  CheckReport a("c", 1e-10), b("c", 1e-10), c("c", 1e-10);
  a.observe(-1.0, Node{0, 0});
  b.observe(1e-11, Node{1, 1});
  a.merge(b);
  EXPECT_TRUE(a.passed());
  EXPECT_EQ(a.checked(), 2u);
  EXPECT_DOUBLE_EQ(a.worst(), 1e-11);
  c.fail("broken");
  a.merge(c);
  EXPECT_FALSE(a.passed());
  EXPECT_EQ(a.note(), "broken");
}

TEST(Report, JsonDump) {
  Json j = Json::object();
  j.set("a", 1).set("b", 0.5).set("c", "x\"y").set("d", std::numeric_limits<double>::infinity());
  Json arr = Json::array();
  arr.push(true).push(nullptr);
  j.set("e", arr);
  EXPECT_EQ(j.dump(0), "{\"a\":1,\"b\":0.5,\"c\":\"x\\\"y\",\"d\":\"inf\",\"e\":[true,null]}");
  EXPECT_EQ(Json::object().dump(), "{}");
  EXPECT_THROW(arr.set("k", 1), Error);
}

TEST(Report, Csv) {
  CsvTable t({"a", "b"});
  t.add_row({"1", "2"});
  EXPECT_EQ(t.str(), "a,b\n1,2\n");
  EXPECT_THROW(t.add_row({"1"}), Error);
}

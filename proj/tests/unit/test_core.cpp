#include <gtest/gtest.h>

#include "fwa/core.hpp"
#include "test_support.hpp"

using namespace fwa;

TEST(Streams, SameSeedAndNameRepeat) {
  Rng a = make_stream(42, "traffic"), b = make_stream(42, "traffic");
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a(), b());
}

TEST(Streams, NamesAndIndexesAreIndependent) {
  EXPECT_NE(make_stream(42, "traffic")(), make_stream(42, "channel")());
  EXPECT_NE(make_stream(42, "traffic")(), make_stream(43, "traffic")());
  EXPECT_NE(make_stream(42, "traffic", 0)(), make_stream(42, "traffic", 1)());
}

TEST(Csv, NumberFormatIsFixed) {
  EXPECT_EQ(csv::num(0.5), "0.5");
  EXPECT_EQ(csv::num(1.0 / 3.0), "0.3333333333");
  EXPECT_EQ(csv::num(1e-12), "1e-12");
  EXPECT_EQ(csv::num(std::nan("")), "nan");
  EXPECT_EQ(csv::num(-INFINITY), "-inf");
  EXPECT_EQ(csv::row(1, 2.5, "x", std::string("y")), "1,2.5,x,y");
}

TEST(Csv, ReadSkipsCommentsAndChecksWidth) {
  fwa::testing::TempDir d("csv");
  {
    std::ofstream o(d / "a.csv");
    o << "# comment\nx,y\n1,2\r\n\n3,4\n";
  }
  auto t = csv::read((d / "a.csv").string());
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.column("y"), 1);
  EXPECT_EQ(t.column("z"), -1);
  EXPECT_EQ(t.rows[0][1], "2");
  {
    std::ofstream o(d / "b.csv");
    o << "x,y\n1,2,3\n";
  }
  try {
    csv::read((d / "b.csv").string());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Parse);
    EXPECT_NE(std::string(e.what()).find("b.csv:2"), std::string::npos);
  }
  EXPECT_THROW(csv::read((d / "missing.csv").string()), Error);
}

TEST(Csv, ToDoubleRejectsTrailingGarbage) {
  EXPECT_DOUBLE_EQ(csv::to_double("2.5", "t"), 2.5);
  EXPECT_THROW(csv::to_double("2.5x", "t"), Error);
  EXPECT_THROW(csv::to_double("", "t"), Error);
}

TEST(Support, ChiSquareReference) {
  // Q(1, 1) = e^-1; Q(2.5, 1) from the series branch, Q(2, 5) from the continued fraction.
  EXPECT_NEAR(fwa::testing::gamma_q(1.0, 1.0), std::exp(-1.0), 1e-12);
  EXPECT_NEAR(fwa::testing::gamma_q(2.0, 5.0), 6.0 * std::exp(-5.0), 1e-12);
  EXPECT_NEAR(fwa::testing::chi_square_p({50, 50}, {0.5, 0.5}), 1.0, 1e-12);
  EXPECT_LT(fwa::testing::chi_square_p({90, 10}, {0.5, 0.5}), 1e-10);
}

TEST(Support, XmlChecker) {
  EXPECT_TRUE(fwa::testing::xml_well_formed("<svg a=\"1\"><g><rect/></g><text>a &amp; b</text></svg>"));
  EXPECT_FALSE(fwa::testing::xml_well_formed("<svg><g></svg>"));
  EXPECT_FALSE(fwa::testing::xml_well_formed("<svg>a & b</svg>"));
  EXPECT_FALSE(fwa::testing::xml_well_formed("<svg a=\"1></svg>"));
  EXPECT_FALSE(fwa::testing::xml_well_formed(""));
}

#include <gtest/gtest.h>

#include "vinesense/csv.hpp"
#include "vinesense/error.hpp"

using namespace vinesense;

TEST(Csv, Escaping) {
  EXPECT_EQ(csv::escape("plain"), "plain");
  EXPECT_EQ(csv::escape("a,b"), "\"a,b\"");
  EXPECT_EQ(csv::escape("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(csv::escape("two\nlines"), "\"two\nlines\"");
}

TEST(Csv, RowsEndInCrlfAndParseBack) {
  std::string out;
  const std::vector<std::string> a{"x", "1,2", ""}, b{"q\"uote", "line\r\nbreak", "z"};
  csv::append_row(out, a);
  csv::append_row(out, b);
  EXPECT_EQ(out.substr(0, 12), "x,\"1,2\",\r\n\"q");
  const auto rows = csv::parse(out);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], a);
  EXPECT_EQ(rows[1], b);
}

TEST(Csv, MalformedInput) {
  EXPECT_THROW(csv::parse("\"open"), Error);
  EXPECT_THROW(csv::parse("\"closed\"x\r\n"), Error);
}

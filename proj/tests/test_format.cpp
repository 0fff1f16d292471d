#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "fastvol/format.hpp"
#include "test_util.hpp"

using namespace fastvol;
using namespace fastvol::testing;

namespace {

ChainTable listing_quotes() {
    ChainTable table;
    table.set_flags(std::vector<OptionFlag>{OptionFlag::call(), OptionFlag::call(), OptionFlag::put()});
    table.set(columns::spot, 100.0);
    table.set(columns::strike, std::vector<double>{95, 100, 105});
    table.set(columns::t, 0.25);
    table.set(columns::r, 0.05);
    table.set(columns::sigma, 0.2);
    return batch_price(Model::BlackScholes, table);
}

CsvError capture(std::string_view text) {
    try {
        (void)parse_csv(text);
    } catch (const CsvError& e) {
        return e;
    }
    ADD_FAILURE() << "no CsvError for: " << text;
    return CsvError(-2, "", "none");
}

} // namespace

TEST(Format, ShortestRoundTripDigits) {
    EXPECT_EQ(format_double(0.1), "0.1");
    EXPECT_EQ(detail::parse_number(format_double(0.1), 0, "x"), 0.1);
    EXPECT_EQ(format_double(1e-300), "1e-300");
    EXPECT_EQ(format_double(std::numeric_limits<double>::quiet_NaN()), "nan");

    std::mt19937_64 rng(3);
    for (int i = 0; i < 10000; ++i) {
        const double v = std::bit_cast<double>(rng());
        if (!std::isfinite(v)) continue;
        const std::string text = format_double(v);
        ASSERT_LE(text.size(), 24u);
        ASSERT_TRUE(same_bits(detail::parse_number(text, 0, "x"), v)) << text;
    }
}

TEST(Format, PlainUsesEightDecimals) {
    EXPECT_EQ(format_plain(0.2), "0.20000000");
    EXPECT_EQ(format_plain(7.965567455405804), "7.96556746");
    EXPECT_EQ(format_plain(1.5e-7), "1.50000000e-07");
    EXPECT_EQ(format_plain(0.0), "0.00000000");
}

TEST(Format, CsvHasHeaderAndOneLinePerRow) {
    ChainTable table;
    table.set_flags("c");
    table.set(columns::strike, 100.0);
    const std::string csv = format_csv(table);
    EXPECT_EQ(csv, "flag,K\nc,100\n");
}

TEST(Format, JsonListingIv) {
    ChainTable quotes = listing_quotes();
    quotes.erase(columns::sigma);
    const ChainTable solved = batch_iv(Model::BlackScholes, IvMethod::Halley, quotes);
    const nlohmann::json doc = nlohmann::json::parse(format_json(solved));
    ASSERT_EQ(doc["iv"].size(), 3u);
    for (const auto& v : doc["iv"]) EXPECT_NEAR(v.get<double>(), 0.2, 1e-8);
    EXPECT_EQ(doc["flag"], nlohmann::json({"c", "c", "p"}));
    EXPECT_EQ(doc["status"][0], "converged");
    EXPECT_EQ(doc["K"], nlohmann::json({95.0, 100.0, 105.0}));
}

TEST(Format, JsonNanIsNull) {
    ChainTable table;
    table.set(columns::iv, std::vector<double>{0.25, std::numeric_limits<double>::quiet_NaN()});
    EXPECT_EQ(format_json(table), "{\"iv\":[0.25,null]}\n");
}

TEST(Format, CsvSerializeParseIsFixedPoint) {
    ChainTable quotes = listing_quotes();
    quotes.erase(columns::sigma);
    const ChainTable solved = batch_iv(Model::BlackScholes, IvMethod::Lbr, quotes);
    const std::string first = format_csv(solved);
    const ChainTable parsed = parse_csv(first);
    EXPECT_EQ(format_csv(parsed), first);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_TRUE(same_bits(parsed.numbers(columns::iv)[i], solved.numbers(columns::iv)[i]));
    }
    EXPECT_EQ(parsed.statuses(columns::status), solved.statuses(columns::status));
}

TEST(Format, PlainTableAligned) {
    ChainTable table;
    table.set(columns::delta, std::vector<double>{0.5, -0.25});
    table.set(columns::vega, std::vector<double>{12.0, 3.0});
    EXPECT_EQ(format_plain_table(table),
              "      delta         vega\n"
              " 0.50000000  12.00000000\n"
              "-0.25000000   3.00000000\n");
}

TEST(Csv, ToleratesWhitespaceAndCrLf) {
    const ChainTable t = parse_csv("flag, K ,t\r\n C ,+100,1e-1\r\n\r\np,90,0.5\n");
    EXPECT_EQ(t.rows(), 2u);
    EXPECT_EQ(t.numbers(columns::strike), (std::vector<double>{100, 90}));
    EXPECT_EQ(t.numbers(columns::t)[0], 0.1);
    EXPECT_FALSE(t.flags()[1].is_call());
}

TEST(Csv, HeaderOnlyIsEmpty) {
    const ChainTable t = parse_csv("flag,S,K,t,r,price\n");
    EXPECT_EQ(t.rows(), 0u);
    EXPECT_EQ(format_csv(t), "flag,S,K,t,r,price\n");
}

TEST(Csv, ErrorsNameRowAndColumn) {
    CsvError e = capture("");
    EXPECT_EQ(e.row(), -1);

    e = capture("K,K\n1,2\n");
    EXPECT_EQ(e.row(), -1);
    EXPECT_EQ(e.column(), "K");

    e = capture("K,t\n1,2\n3\n");
    EXPECT_EQ(e.row(), 1);

    e = capture("flag,K\nc,1\nc,abc\n");
    EXPECT_EQ(e.row(), 1);
    EXPECT_EQ(e.column(), "K");
    EXPECT_NE(std::string(e.what()).find("row 1, column 'K'"), std::string::npos);

    e = capture("flag,K\nz,1\n");
    EXPECT_EQ(e.column(), "flag");

    e = capture("status\nGreat\n");
    EXPECT_EQ(e.column(), "status");

    e = capture("K\n1.5x\n");
    EXPECT_EQ(e.column(), "K");
}

TEST(Format, ParseFormatNames) {
    EXPECT_EQ(parse_format("csv"), OutputFormat::Csv);
    EXPECT_EQ(parse_format("json"), OutputFormat::Json);
    EXPECT_EQ(parse_format("plain"), OutputFormat::Plain);
    EXPECT_THROW(parse_format("xml"), DomainError);
}

#include "epicast/csv.hpp"
#include "epicast/errors.hpp"
#include "epicast/ingest.hpp"

#include "synthetic.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <set>

using namespace epicast;

namespace {

Date ymd(int y, unsigned m, unsigned d) { return Date{std::chrono::year{y} / std::chrono::month{m} / std::chrono::day{d}}; }

RegionSeries cumulative(std::vector<double> values) {
    RegionSeries s;
    s.key.country = "Test";
    s.start = ymd(2020, 3, 1);
    s.values = std::move(values);
    return s;
}

} // namespace

TEST(Dates, IsoAndMdyRoundTrip) {
    EXPECT_EQ(parse_mdy_date("1/22/20"), ymd(2020, 1, 22));
    EXPECT_EQ(parse_mdy_date("12/31/2021"), ymd(2021, 12, 31));
    EXPECT_EQ(to_mdy(ymd(2020, 4, 5)), "4/5/20");
    EXPECT_EQ(to_iso(ymd(2020, 4, 5)), "2020-04-05");
    EXPECT_EQ(parse_iso_date("2020-02-29"), ymd(2020, 2, 29));
    EXPECT_THROW(parse_iso_date("2020-02-30"), FormatError);
    EXPECT_THROW(parse_mdy_date("13/1/20"), FormatError);
    EXPECT_THROW(parse_mdy_date("1/22"), FormatError);
}

TEST(Csv, QuotedFieldsAndLineEndings) {
    const auto rows = csv::parse("\xEF\xBB\xBF" "a,\"b,c\",\"say \"\"hi\"\"\"\r\n\r\n1,2,3\n");
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].fields, (std::vector<std::string>{"a", "b,c", "say \"hi\""}));
    EXPECT_EQ(rows[1].line, 3u);
    EXPECT_EQ(csv::escape("x,y"), "\"x,y\"");
    EXPECT_EQ(csv::format_number(3.0), "3");
    EXPECT_EQ(csv::format_number(0.1), "0.1");
}

TEST(ParseWide, DirectFieldMapping) {
    const auto parsed = parse_wide_csv("Province/State,Country/Region,Lat,Long,1/22/20,1/23/20\n,US,40.7,-74.0,1,3\n",
                                       Measure::confirmed);
    ASSERT_EQ(parsed.series.size(), 1u);
    const auto &s = parsed.series[0];
    EXPECT_EQ(s.key.country, "US");
    EXPECT_FALSE(s.key.province.has_value());
    EXPECT_DOUBLE_EQ(*s.key.latitude, 40.7);
    EXPECT_EQ(s.start, ymd(2020, 1, 22));
    EXPECT_EQ(s.values, (std::vector<double>{1, 3}));
    EXPECT_EQ(s.kind, SeriesKind::cumulative);
}

TEST(ParseWide, HeaderOnlyGivesEmptyList) {
    EXPECT_TRUE(parse_wide_csv("Province/State,Country/Region,Lat,Long,1/22/20\n", Measure::deaths).series.empty());
}

TEST(ParseWide, MalformedHeaderNamesColumn) {
    try {
        parse_wide_csv("Province/State,Country,Lat,Long,1/22/20\n,US,1,1,1\n", Measure::confirmed);
        FAIL() << "expected FormatError";
    } catch (const FormatError &e) {
        EXPECT_NE(std::string(e.what()).find("Country"), std::string::npos) << e.what();
    }
    try {
        parse_wide_csv("Province/State,Country/Region,Lat,Long,1/22/20,Jan 23\n,US,1,1,1,2\n", Measure::confirmed);
        FAIL() << "expected FormatError";
    } catch (const FormatError &e) {
        EXPECT_NE(std::string(e.what()).find("Jan 23"), std::string::npos) << e.what();
    }
    EXPECT_THROW(parse_wide_csv("Province/State,Country/Region,Lat,Long,1/22/20,1/24/20\n", Measure::confirmed),
                 FormatError);
}

TEST(ParseWide, BadCellCarriesCoordinates) {
    const std::string text = "Province/State,Country/Region,Lat,Long,1/22/20,1/23/20\n"
                             ",A,1,1,1,2\n"
                             ",B,1,1,1,x\n"
                             ",C,1,1,4,5\n";
    try {
        parse_wide_csv(text, Measure::confirmed);
        FAIL() << "expected DataError";
    } catch (const DataError &e) {
        EXPECT_EQ(e.row(), 3u);
        EXPECT_EQ(e.column(), 5u);
    }
    const auto lenient = parse_wide_csv(text, Measure::confirmed, ParseOptions{true});
    ASSERT_EQ(lenient.series.size(), 2u);
    EXPECT_EQ(lenient.series[1].key.country, "C");
    ASSERT_EQ(lenient.skipped.size(), 1u);
    EXPECT_EQ(lenient.skipped[0].row, 3u);
    EXPECT_THROW(parse_wide_csv("Province/State,Country/Region,Lat,Long,1/22/20\n,A,1,1,-3\n", Measure::confirmed),
                 DataError);
}

TEST(ParseWide, OutOfRangeCoordinatesAreMissing) {
    const auto parsed =
        parse_wide_csv("Province/State,Country/Region,Lat,Long,1/22/20\n,A,95,10,1\nP,B,,,2\n", Measure::confirmed);
    EXPECT_FALSE(parsed.series[0].key.latitude.has_value());
    EXPECT_TRUE(parsed.series[0].key.longitude.has_value());
    EXPECT_FALSE(parsed.series[1].key.latitude.has_value());
    EXPECT_EQ(parsed.series[1].key.display_name(), "P, B");
}

TEST(ParseWide, UsCountyLayout) {
    const std::vector<std::vector<double>> values{{0, 1, 5}, {2, 2, 9}};
    const std::string text =
        synth::synthetic_us_csv({{"Los Angeles", "California"}, {"New York", "New York"}}, values, ymd(2020, 3, 1));
    const auto parsed = parse_wide_csv(text, Measure::confirmed);
    ASSERT_EQ(parsed.series.size(), 2u);
    EXPECT_EQ(parsed.series[0].key.display_name(), "Los Angeles, California, US");
    EXPECT_EQ(parsed.series[1].values, values[1]);
    EXPECT_EQ(parsed.series[1].start, ymd(2020, 3, 1));
    EXPECT_NE(find_region(parsed.series, "new york, new york, us"), nullptr);
}

TEST(ParseWide, RoundTripThroughSerialize) {
    const auto original = synth::synthetic_regions(5, 10, 7);
    const std::string text = serialize_wide_csv(original);
    const auto once = parse_wide_csv(text, Measure::confirmed).series;
    ASSERT_EQ(once.size(), original.size());
    for (std::size_t i = 0; i < once.size(); ++i) {
        EXPECT_EQ(once[i].key.display_name(), original[i].key.display_name());
        EXPECT_EQ(once[i].values, original[i].values);
        EXPECT_EQ(once[i].start, original[i].start);
        EXPECT_NEAR(*once[i].key.latitude, *original[i].key.latitude, 1e-12);
    }
    EXPECT_EQ(serialize_wide_csv(once), text);
    const auto twice = parse_wide_csv(serialize_wide_csv(once), Measure::confirmed).series;
    for (std::size_t i = 0; i < once.size(); ++i) {
        EXPECT_EQ(twice[i].values, once[i].values);
    }
}

TEST(RegionKey, CaseInsensitiveEquality) {
    RegionKey a{std::string(" Hubei"), "China", 30.0, 112.0};
    RegionKey b{std::string("hubei "), "CHINA", std::nullopt, std::nullopt};
    EXPECT_EQ(a, b);
    RegionKey c{std::nullopt, "China", 30.0, 112.0};
    EXPECT_FALSE(a == c);
}

TEST(Daily, Examples) {
    EXPECT_EQ(to_daily(cumulative({1, 3, 6, 6})).values, (std::vector<double>{1, 2, 3, 0}));
    EXPECT_EQ(to_daily(cumulative({5})).values, (std::vector<double>{5}));
    const auto clamped = to_daily_counted(cumulative({10, 8, 12}));
    EXPECT_EQ(clamped.value.values, (std::vector<double>{10, 0, 4}));
    EXPECT_EQ(clamped.changes, 1u);
    EXPECT_EQ(clamped.value.kind, SeriesKind::daily);
    EXPECT_THROW(to_daily(clamped.value), ContractError);
}

TEST(Daily, CumulativeSumInverts) {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> v;
        double total = 0;
        for (int i = 0; i < 30; ++i) {
            total += static_cast<double>(rng.index(50));
            v.push_back(total);
        }
        const auto s = cumulative(v);
        EXPECT_EQ(to_cumulative(to_daily(s)).values, s.values);
    }
}

TEST(Repair, RunningMax) {
    auto a = repair_cumulative(cumulative({1, 2, 2, 5}));
    EXPECT_EQ(a.value.values, (std::vector<double>{1, 2, 2, 5}));
    EXPECT_EQ(a.changes, 0u);
    auto b = repair_cumulative(cumulative({1, 5, 3, 6}));
    EXPECT_EQ(b.value.values, (std::vector<double>{1, 5, 5, 6}));
    EXPECT_EQ(b.changes, 1u);

    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> v(1 + rng.index(40));
        for (auto &x : v) {
            x = static_cast<double>(rng.index(100));
        }
        std::vector<double> oracle(v.size());
        double best = -1;
        std::size_t changes = 0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (v[i] < best) {
                ++changes;
            }
            best = std::max(best, v[i]);
            oracle[i] = best;
        }
        const auto repaired = repair_cumulative(cumulative(v));
        EXPECT_EQ(repaired.value.values, oracle);
        EXPECT_EQ(repaired.changes, changes);
        EXPECT_EQ(repair_cumulative(repaired.value).changes, 0u);
    }
}

TEST(Split, Shapes) {
    std::vector<double> v(100);
    std::iota(v.begin(), v.end(), 0.0);
    const auto s = cumulative(v);
    const auto [train, test] = split_train_test(s, 10);
    EXPECT_EQ(train.size(), 90u);
    EXPECT_EQ(test.size(), 10u);
    EXPECT_EQ(test.start, add_days(s.start, 90));
    std::vector<double> joined = train.values;
    joined.insert(joined.end(), test.values.begin(), test.values.end());
    EXPECT_EQ(joined, v);
    const auto [all, none] = split_train_test(s, 0);
    EXPECT_EQ(all.size(), 100u);
    EXPECT_EQ(none.size(), 0u);
    EXPECT_THROW(split_train_test(s, 100), ContractError);
}

TEST(Weather, ParseAndValidate) {
    const auto w = parse_weather_csv("region,date,temp_avg_c\nX,2020-03-01,4.5\nX,2020-03-02,-1\n");
    ASSERT_EQ(w.size(), 2u);
    EXPECT_DOUBLE_EQ(w[1].temp_avg, -1.0);
    EXPECT_THROW(parse_weather_csv("region,date,temp_avg_c\nX,2020-03-01,75\n"), DataError);
    EXPECT_THROW(parse_weather_csv("region,date,temp_avg_c\nX,2020-03-01,1\nX,2020-03-01,2\n"), DataError);
    EXPECT_THROW(parse_weather_csv("region,day,temp\n"), FormatError);
}

TEST(Join, InnerJoinSemantics) {
    RegionSeries daily = to_daily(cumulative({1, 3, 6}));
    daily.key.latitude = 12.5;
    NameMap map;
    map.add("Test", "Station");
    std::vector<WeatherRecord> weather{{"Station", ymd(2020, 3, 1), 10}, {"Station", ymd(2020, 3, 2), 11},
                                       {"Station", ymd(2020, 3, 3), 12}, {"Other", ymd(2020, 3, 2), 99}};
    const auto full = join_weather(daily, weather, map);
    ASSERT_EQ(full.rows.size(), 3u);
    EXPECT_EQ(full.dropped, 0u);
    EXPECT_EQ(full.rows[2].day_index, 2);
    EXPECT_DOUBLE_EQ(full.rows[2].new_cases, 3.0);
    EXPECT_DOUBLE_EQ(full.rows[1].temperature, 11.0);
    EXPECT_DOUBLE_EQ(full.rows[0].latitude, 12.5);

    weather.erase(weather.begin() + 1);
    const auto gap = join_weather(daily, weather, map);
    ASSERT_EQ(gap.rows.size(), 2u);
    EXPECT_EQ(gap.dropped, 1u);
    EXPECT_EQ(gap.rows[1].day_index, 2);

    NameMap empty;
    try {
        join_weather(daily, weather, empty);
        FAIL() << "expected LookupError";
    } catch (const LookupError &) {
    }
}

TEST(Join, RowCountIsDateIntersection) {
    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 5 + rng.index(40);
        std::vector<double> cum(n);
        double total = 0;
        for (auto &c : cum) {
            total += static_cast<double>(rng.index(9));
            c = total;
        }
        RegionSeries daily = to_daily(cumulative(cum));
        daily.key.latitude = 1.0;
        NameMap map;
        map.add("test", "w");
        std::vector<WeatherRecord> weather;
        std::set<long long> days;
        const Date w0 = add_days(daily.start, static_cast<long long>(rng.index(10)) - 5);
        for (std::size_t i = 0; i < n + 10; ++i) {
            if (rng.uniform() < 0.7) {
                weather.push_back({"w", add_days(w0, static_cast<long long>(i)), 0.0});
                days.insert(days_since_epoch(weather.back().date));
            }
        }
        std::reverse(weather.begin(), weather.end());
        std::size_t expected = 0;
        for (std::size_t i = 0; i < n; ++i) {
            expected += days.count(days_since_epoch(daily.date_at(i)));
        }
        const auto joined = join_weather(daily, weather, map);
        ASSERT_EQ(joined.rows.size(), expected);
        EXPECT_EQ(joined.dropped, n - expected);
        for (std::size_t i = 1; i < joined.rows.size(); ++i) {
            EXPECT_LT(joined.rows[i - 1].date, joined.rows[i].date);
        }
    }
}

TEST(NameMapFile, ParsesQuotedNames) {
    const auto map = NameMap::parse("case_region,weather_region\n\"Los Angeles, California, US\",LAX\n");
    RegionKey key{std::string("Los Angeles, California"), "US", 34.0, -118.0};
    EXPECT_EQ(map.resolve(key), "LAX");
    EXPECT_THROW(NameMap::parse("a,b\nx,y\n"), FormatError);
}

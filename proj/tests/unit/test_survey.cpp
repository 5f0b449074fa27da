#include <cmath>
#include <fstream>
#include <sstream>

#include <doctest.h>

#include "latticefwe/survey.hpp"

using namespace latticefwe;

namespace {

survey::StudyRecord make_record(double fwhm, bool rft, double vx = 3.0, double vy = 3.0,
                                double vz = 3.0) {
  survey::StudyRecord r;
  r.study_id = "S";
  r.voxel_x_mm = vx;
  r.voxel_y_mm = vy;
  r.voxel_z_mm = vz;
  r.applied_fwhm_mm = fwhm;
  r.software = "SPM";
  r.correction_method = rft ? survey::CorrectionMethod::corrected_parametric
                            : survey::CorrectionMethod::permutation;
  r.uses_rft = rft;
  return r;
}

constexpr char kHeader[] =
    "study_id,voxel_x_mm,voxel_y_mm,voxel_z_mm,applied_fwhm_mm,software,correction_method,"
    "uses_rft\n";

}  // namespace

TEST_SUITE_BEGIN("survey");

TEST_CASE("method tokens") {
  for (std::size_t i = 0; i < survey::kMethodCount; ++i) {
    const auto m = static_cast<survey::CorrectionMethod>(i);
    CHECK(survey::method_from_token(survey::method_token(m)) == m);
  }
  CHECK(survey::method_token(survey::CorrectionMethod::corrected_parametric) ==
        std::string("corrected_parametric"));
  CHECK_THROWS_AS(survey::method_from_token("rft"), std::invalid_argument);
}

TEST_CASE("ingest") {
  SUBCASE("well-formed rows") {
    std::istringstream in(std::string(kHeader) +
                          "S001,3,3,3,6,SPM,corrected_parametric,true\n"
                          "S002,2,2,4,8,FSL,permutation,false\n"
                          "S003,3.01,3.01,3.53,0,AFNI,not_reported,false\n");
    const auto result = survey::ingest(in);
    REQUIRE(result.records.size() == 3);
    CHECK(result.rejected.empty());
    CHECK(result.records[0].study_id == "S001");
    CHECK(result.records[0].uses_rft);
    CHECK(result.records[1].correction_method == survey::CorrectionMethod::permutation);
    CHECK(result.records[2].applied_fwhm_mm == 0.0);
  }
  SUBCASE("empty body") {
    std::istringstream in(kHeader);
    const auto result = survey::ingest(in);
    CHECK(result.records.empty());
    CHECK(result.rejected.empty());
  }
  SUBCASE("bad rows are reported with their line number") {
    std::istringstream in(std::string(kHeader) +
                          "S001,3,3,3,6,SPM,corrected_parametric,true\n"
                          "S002,3,3,3,6,SPM,permutation,false\n"
                          "S003,-2,3,3,6,SPM,permutation,false\n"
                          "S004,3,3,3,6,SPM,fdr,maybe\n"
                          "S005,3,3,3,6,SPM,magic,false\n"
                          "S006,3,3,3,-1,SPM,fdr,false\n"
                          "S007,3,3,3,6,SPM,fdr,true\n"
                          "S008,3,3,3,6,SPM,fdr\n"
                          ",3,3,3,6,SPM,fdr,false\n"
                          "S010,x,3,3,6,SPM,fdr,false\n");
    const auto result = survey::ingest(in);
    CHECK(result.records.size() == 2);
    REQUIRE(result.rejected.size() == 8);
    CHECK(result.rejected[0].line == 4);  // header is line 1
    CHECK(result.rejected[0].reason.find("voxel_x_mm") != std::string::npos);
    CHECK(result.rejected[1].line == 5);
    CHECK(result.rejected[2].line == 6);
    CHECK(result.rejected[3].line == 7);
    CHECK(result.rejected[4].line == 8);
    CHECK(result.rejected[4].reason.find("inconsistent") != std::string::npos);
    CHECK(result.rejected[5].line == 9);
    CHECK(result.rejected[5].reason.find("8 fields") != std::string::npos);
    CHECK(result.rejected[6].line == 10);
    CHECK(result.rejected[7].line == 11);
  }
  SUBCASE("blank lines and CRLF are tolerated") {
    std::istringstream in(std::string(kHeader) +
                          "S001,3,3,3,6,SPM,fdr,false\r\n"
                          "\n"
                          "S002,3,3,3,6,SPM,fdr,false\n");
    const auto result = survey::ingest(in);
    CHECK(result.records.size() == 2);
    CHECK(result.rejected.empty());
  }
  SUBCASE("malformed header") {
    std::istringstream wrong("id,vx\nS001,3\n");
    CHECK_THROWS_AS(survey::ingest(wrong), survey::MalformedHeader);
    std::istringstream empty("");
    CHECK_THROWS_AS(survey::ingest(empty), survey::MalformedHeader);
  }
  SUBCASE("round trip is lossless") {
    const auto records = survey::synthetic_survey();
    std::ostringstream out;
    survey::write_csv(out, records);
    std::istringstream in(out.str());
    const auto back = survey::ingest(in);
    CHECK(back.rejected.empty());
    CHECK(back.records == records);
  }
}

TEST_CASE("smoothness_ratio") {
  CHECK(survey::smoothness_ratio(make_record(6.0, false)) == 2.0);
  CHECK(survey::smoothness_ratio(make_record(6.0, false), survey::RatioMode::geometric_mean) ==
        doctest::Approx(2.0).epsilon(1e-12));
  CHECK(survey::smoothness_ratio(make_record(8.0, false, 2, 2, 4),
                                 survey::RatioMode::geometric_mean) ==
        doctest::Approx(3.1748).epsilon(1e-4));
  CHECK(survey::smoothness_ratio(make_record(8.0, false, 2, 2, 4)) == 4.0);
  // survey-average kernel over survey-average in-plane voxel
  CHECK(survey::smoothness_ratio(make_record(6.12, false, 3.01, 3.01, 3.53)) ==
        doctest::Approx(2.033).epsilon(2e-4));
  CHECK_THROWS_AS(survey::smoothness_ratio(make_record(0.0, false)), std::domain_error);
}

TEST_CASE("fit_ratio_model") {
  const double xs[] = {1.0, 2.0, 3.0};
  const auto m = survey::fit_ratio_model(xs);
  CHECK(m.mean == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(m.sd == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-14));

  const double flat[] = {1.5, 1.5, 1.5};
  CHECK_THROWS_AS(survey::fit_ratio_model(flat), std::invalid_argument);
  const double one[] = {1.5};
  CHECK_THROWS_AS(survey::fit_ratio_model(one), std::invalid_argument);
}

TEST_CASE("prob_meets_assumption") {
  const survey::RatioModel base{1.99, 0.64};
  const double p = survey::prob_meets_assumption(base, 3.5);
  CHECK(p > 0.008);
  CHECK(p < 0.010);
  CHECK(survey::prob_meets_assumption(base, base.mean) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(survey::prob_meets_assumption(base, 100.0) == doctest::Approx(0.0).epsilon(1e-12));

  SUBCASE("strictly decreasing in the critical ratio") {
    double prev = 1.0;
    for (double c = 1.0; c <= 5.0; c += 0.5) {
      const double q = survey::prob_meets_assumption(base, c);
      CHECK(q < prev);
      prev = q;
    }
  }
  SUBCASE("increasing in sd above the mean") {
    CHECK(survey::prob_meets_assumption({1.99, 0.8}, 3.5) >
          survey::prob_meets_assumption({1.99, 0.64}, 3.5));
  }
}

TEST_CASE("adjust_model") {
  const survey::RatioModel base{1.99, 0.64};
  const auto median = survey::adjust_model(base, 1.36);
  CHECK(median.mean == doctest::Approx(2.7064).epsilon(1e-12));
  CHECK(median.sd == doctest::Approx(0.8704).epsilon(1e-12));
  const auto upper = survey::adjust_model(base, 1.77);
  CHECK(upper.mean == doctest::Approx(3.5223).epsilon(1e-12));
  CHECK(upper.sd == doctest::Approx(1.1328).epsilon(1e-12));
  const auto same = survey::adjust_model(base, 1.0);
  CHECK(same.mean == base.mean);
  CHECK(same.sd == base.sd);
  CHECK_THROWS_AS(survey::adjust_model(base, 0.0), std::domain_error);

  SUBCASE("z-scores are scale invariant") {
    const double r = 3.5, m = 1.36;
    const auto adj = survey::adjust_model(base, m);
    CHECK((r * m - adj.mean) / adj.sd ==
          doctest::Approx((r - base.mean) / base.sd).epsilon(1e-12));
  }
}

TEST_CASE("fail_percentage") {
  const survey::RatioModel base{1.99, 0.64};
  const survey::ResidualQuantiles q{};  // (1.26, 1.36, 1.77)
  const auto f = survey::fail_percentage(base, q, 3.5);
  CHECK(std::fabs(f.low - 49.0) <= 1.0);  // published values, +-1 percentage point
  CHECK(std::fabs(f.median - 82.0) <= 1.0);
  CHECK(std::fabs(f.high - 89.0) <= 1.0);
  CHECK(f.low <= f.median);
  CHECK(f.median <= f.high);

  SUBCASE("critical 0 leaves effectively nothing below") {
    const auto z = survey::fail_percentage(base, q, 0.0);
    CHECK(z.low < 0.15);
    CHECK(z.median < 0.15);
    CHECK(z.high < 0.15);
  }
  SUBCASE("degenerate quantiles collapse to the complement probability") {
    const auto d = survey::fail_percentage(base, {1.0, 1.0, 1.0}, 3.5);
    const double expect = 100.0 * (1.0 - survey::prob_meets_assumption(base, 3.5));
    CHECK(d.low == doctest::Approx(expect).epsilon(1e-12));
    CHECK(d.median == d.low);
    CHECK(d.high == d.low);
  }
  SUBCASE("quantile ordering is validated") {
    CHECK_THROWS_AS(survey::fail_percentage(base, {1.5, 1.3, 1.7}, 3.5), std::domain_error);
  }
}

TEST_CASE("compare_rft_users") {
  const auto records = survey::synthetic_survey();
  const auto g = survey::compare_rft_users(records);
  CHECK(g.n_rft == 68);
  CHECK(g.n_other == 69);
  CHECK(g.n_unsmoothed == 0);
  CHECK(g.mean_rft == doctest::Approx(2.05).epsilon(1e-9));
  CHECK(g.mean_other == doctest::Approx(1.94).epsilon(1e-9));
  CHECK(g.test.t == doctest::Approx(1.005845).epsilon(1e-4));
  CHECK(g.test.df == doctest::Approx(134.97).epsilon(1e-3));
  CHECK(g.test.p_two_sided > 0.2);
  CHECK(g.test.p_two_sided < 0.45);

  SUBCASE("flipping the group labels negates t") {
    auto flipped = records;
    for (auto& r : flipped) {
      r.uses_rft = !r.uses_rft;
      r.correction_method = r.uses_rft ? survey::CorrectionMethod::corrected_parametric
                                       : survey::CorrectionMethod::uncorrected_parametric;
    }
    const auto h = survey::compare_rft_users(flipped);
    CHECK(h.test.t == doctest::Approx(-g.test.t).epsilon(1e-12));
    CHECK(h.test.df == doctest::Approx(g.test.df).epsilon(1e-12));
    CHECK(h.test.p_two_sided == doctest::Approx(g.test.p_two_sided).epsilon(1e-12));
  }
  SUBCASE("equal groups give p near 1") {
    std::vector<survey::StudyRecord> twin;
    for (double f : {4.0, 5.0, 6.0, 7.0}) {
      twin.push_back(make_record(f, true));
      twin.push_back(make_record(f, false));
    }
    const auto e = survey::compare_rft_users(twin);
    CHECK(e.test.t == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(e.test.p_two_sided == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("a group below 2 members is an error") {
    std::vector<survey::StudyRecord> few = {make_record(4.0, true), make_record(5.0, false),
                                            make_record(6.0, false)};
    CHECK_THROWS_AS(survey::compare_rft_users(few), std::invalid_argument);
  }
  SUBCASE("unsmoothed records are excluded but counted") {
    auto padded = records;
    padded.push_back(make_record(0.0, false));
    const auto h = survey::compare_rft_users(padded);
    CHECK(h.n_unsmoothed == 1);
    CHECK(h.n_other == 69);
    CHECK(h.test.t == doctest::Approx(g.test.t).epsilon(1e-12));
  }
}

TEST_CASE("synthetic_survey") {
  const auto records = survey::synthetic_survey();
  REQUIRE(records.size() == 137);
  CHECK(records.front().study_id == "S001");
  CHECK(records.back().study_id == "S137");

  std::size_t tally[survey::kMethodCount] = {};
  for (const auto& r : records) {
    CHECK(r.voxel_x_mm > 0);
    CHECK(r.voxel_y_mm > 0);
    CHECK(r.voxel_z_mm > 0);
    CHECK(r.applied_fwhm_mm > 0);
    CHECK(r.uses_rft ==
          (r.correction_method == survey::CorrectionMethod::corrected_parametric));
    ++tally[static_cast<std::size_t>(r.correction_method)];
  }
  const std::size_t expected[survey::kMethodCount] = {68, 24, 17, 8, 6, 3, 1, 1, 1, 8};
  for (std::size_t i = 0; i < survey::kMethodCount; ++i) CHECK(tally[i] == expected[i]);

  SUBCASE("shipped fixture matches the generator") {
    std::ifstream file(LATTICEFWE_FIXTURE_PATH);
    REQUIRE(file.good());
    const auto back = survey::ingest(file);
    CHECK(back.rejected.empty());
    CHECK(back.records == records);
  }
}

TEST_CASE("analyze") {
  const auto records = survey::synthetic_survey();
  const auto a = survey::analyze(records, 3.5);
  CHECK(a.n_records == 137);
  CHECK(a.n_unsmoothed == 0);
  CHECK(a.method_tally[0] == 68);
  CHECK(a.model.mean == doctest::Approx(1.9946).epsilon(1e-4));
  CHECK(a.model.sd == doctest::Approx(0.6377).epsilon(1e-3));
  CHECK(a.prob_meets > 0.008);
  CHECK(a.prob_meets < 0.010);
  CHECK(std::fabs(a.fail.median - 82.0) <= 1.5);
  REQUIRE(a.groups.has_value());
  CHECK(a.groups->test.t == doctest::Approx(1.005845).epsilon(1e-4));

  SUBCASE("geometric mode shifts the model") {
    const auto geo = survey::analyze(records, 3.5, survey::RatioMode::geometric_mean);
    CHECK(geo.model.mean != doctest::Approx(a.model.mean).epsilon(1e-6));
  }
  SUBCASE("reports carry the headline numbers") {
    std::ostringstream text, csv;
    survey::write_report_text(text, a);
    survey::write_report_csv(csv, a);
    CHECK(text.str().find("P(ratio >= critical)") != std::string::npos);
    CHECK(text.str().find("corrected_parametric: 68") != std::string::npos);
    CHECK(csv.str().rfind("key,value\n", 0) == 0);
    CHECK(csv.str().find("prob_meets,") != std::string::npos);
    CHECK(csv.str().find("welch_t,") != std::string::npos);
    CHECK(csv.str().find("n_records,137") != std::string::npos);
  }
}

TEST_SUITE_END();

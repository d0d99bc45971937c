#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "imblab/dataio.hpp"

using namespace imblab;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "imblab_test_dataio";
    std::filesystem::create_directories(dir);
    return dir / name;
}

double empirical_rate(const Dataset& ds) {
    return static_cast<double>(ds.positives()) / static_cast<double>(ds.rows());
}

} // namespace

TEST(Dataset, RejectsInvalidShapesAndValues) {
    EXPECT_THROW(Dataset(0, 1, {}, {}), InvalidArgument);
    EXPECT_THROW(Dataset(1, 1, {1.0}, {2}), InvalidArgument);
    EXPECT_THROW(Dataset(1, 1, {NAN}, {0}), InvalidArgument);
    EXPECT_THROW(Dataset(2, 1, {1.0}, {0, 1}), InvalidArgument);
    EXPECT_NO_THROW(Dataset(1, 1, {1.0}, {1}));
}

TEST(GroundTruth, FivePercentTargetIsCalibrated) {
    GeneratorConfig cfg;
    cfg.d = 100;
    cfg.target_positive_rate = 0.05;
    cfg.seed = 11;
    const auto gt = make_ground_truth(cfg);
    EXPECT_LT(gt.omega0, 0.0);
    const double rate = monte_carlo_positive_rate(gt, 200000, 99);
    EXPECT_GE(rate, 0.045);
    EXPECT_LE(rate, 0.055);
}

TEST(GroundTruth, ZeroCoefficientsGiveZeroInterceptAtOneHalf) {
    GeneratorConfig cfg;
    cfg.d = 5;
    cfg.target_positive_rate = 0.5;
    cfg.omega_scale = 0.0;
    const auto gt = make_ground_truth(cfg);
    for (double w : gt.omega) {
        EXPECT_EQ(w, 0.0);
    }
    EXPECT_EQ(gt.omega0, 0.0);
}

TEST(GroundTruth, TwoDimensionalInterceptMatchesFullMonteCarlo) {
    GeneratorConfig cfg;
    cfg.d = 2;
    cfg.target_positive_rate = 0.05;
    cfg.seed = 4;
    const auto gt = make_ground_truth(cfg);
    // independent oracle: draw full x vectors, not the projection
    std::mt19937 rng(2024);
    std::normal_distribution<double> normal;
    double s = 0.0;
    const int draws = 1000000;
    for (int i = 0; i < draws; ++i) {
        const double x0 = normal(rng);
        const double x1 = normal(rng);
        s += 1.0 / (1.0 + std::exp(-(gt.omega[0] * x0 + gt.omega[1] * x1 + gt.omega0)));
    }
    // calibration tolerance 0.005 plus Monte Carlo slack
    EXPECT_NEAR(s / draws, 0.05, 0.006);
}

TEST(GroundTruth, DeterministicGivenSeedAndRejectsBadRates) {
    GeneratorConfig cfg;
    cfg.seed = 5;
    const auto a = make_ground_truth(cfg);
    const auto b = make_ground_truth(cfg);
    EXPECT_EQ(a.omega, b.omega);
    EXPECT_EQ(a.omega0, b.omega0);
    cfg.target_positive_rate = 0.0;
    EXPECT_THROW(make_ground_truth(cfg), InvalidArgument);
    cfg.target_positive_rate = 1.0;
    EXPECT_THROW(make_ground_truth(cfg), InvalidArgument);
}

TEST(GroundTruth, UnbracketableTargetIsACalibrationFailure) {
    GeneratorConfig cfg;
    cfg.d = 1;
    cfg.omega_scale = 0.0;
    cfg.target_positive_rate = 1e-30; // sigmoid(-50) ~ 2e-22 is still above this
    EXPECT_THROW(make_ground_truth(cfg), NumericalError);
}

TEST(SampleD0, PositiveCountAveragesSixAtN120) {
    GeneratorConfig cfg;
    cfg.seed = 21;
    const auto gt = make_ground_truth(cfg);
    double total = 0.0;
    const int seeds = 400;
    for (int s = 0; s < seeds; ++s) {
        total += static_cast<double>(sample_d0(gt, 120, 1000 + s).positives());
    }
    EXPECT_NEAR(total / seeds, 6.0, 1.0);
}

TEST(SampleD0, HugeNegativeInterceptGivesNoPositives) {
    LogisticGroundTruth gt{std::vector<double>(3, 0.0), -1e9};
    EXPECT_EQ(sample_d0(gt, 500, 1).positives(), 0u);
}

TEST(SampleD0, EmpiricalRateWithinThreeStandardErrors) {
    GeneratorConfig cfg;
    cfg.d = 10;
    cfg.seed = 8;
    const auto gt = make_ground_truth(cfg);
    const double p = monte_carlo_positive_rate(gt, 1000000, 5);
    const std::size_t n = 100000;
    const double se = std::sqrt(p * (1 - p) / n);
    EXPECT_NEAR(empirical_rate(sample_d0(gt, n, 77)), p, 3 * se);
}

TEST(SampleD0, BitIdenticalForSameSeed) {
    GeneratorConfig cfg;
    cfg.d = 7;
    const auto gt = make_ground_truth(cfg);
    EXPECT_EQ(sample_d0(gt, 50, 3), sample_d0(gt, 50, 3));
    EXPECT_NE(sample_d0(gt, 50, 3), sample_d0(gt, 50, 4));
}

TEST(SampleD1, ExactCompositionForEverySeed) {
    GeneratorConfig cfg;
    cfg.seed = 2;
    const auto gt = make_ground_truth(cfg);
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto ds = sample_d1(gt, 120, 0.5, s);
        EXPECT_EQ(ds.rows(), 120u);
        EXPECT_EQ(ds.positives(), 60u);
        EXPECT_EQ(ds.negatives(), 60u);
    }
}

TEST(SampleD1, BoundaryCompositionOnePositiveOneNegative) {
    GeneratorConfig cfg;
    cfg.d = 3;
    cfg.target_positive_rate = 0.3;
    const auto gt = make_ground_truth(cfg);
    const auto ds = sample_d1(gt, 2, 0.4, 9); // ceil(0.8) = 1
    EXPECT_EQ(ds.positives(), 1u);
    EXPECT_EQ(ds.negatives(), 1u);
    EXPECT_THROW(sample_d1(gt, 2, 0.6, 9), InvalidArgument); // ceil(1.2) = 2 leaves no negatives
}

TEST(SampleD1, RawDrawsMatchNegativeBinomialExpectation) {
    GeneratorConfig cfg;
    cfg.seed = 31;
    const auto gt = make_ground_truth(cfg);
    const double rate = monte_carlo_positive_rate(gt, 1000000, 17);
    const double expected = 60.0 / rate; // ~1200
    const double sd_one = std::sqrt(60.0 * (1.0 - rate)) / rate;
    const int runs = 200;
    double total = 0.0;
    for (int s = 0; s < runs; ++s) {
        RejectionStats st;
        sample_d1(gt, 120, 0.5, 500 + s, &st);
        total += static_cast<double>(st.draws_to_fill_positives);
        EXPECT_GE(st.raw_draws, st.draws_to_fill_positives);
    }
    EXPECT_NEAR(total / runs, expected, 4.0 * sd_one / std::sqrt(runs));
}

TEST(SampleD1, DrawBudgetExceededIsReported) {
    LogisticGroundTruth gt{std::vector<double>(1, 0.0), -40.0};
    EXPECT_THROW(sample_d1(gt, 4, 0.5, 1), NumericalError);
}

TEST(Csv, RoundTripIsExact) {
    const Dataset ds(2, 2, {0.1, -2.5e-300, 1.0 / 3.0, 12345.678}, {1, 0});
    const auto path = temp_file("rt.csv");
    save_csv(ds, path);
    const auto back = load_csv(path);
    EXPECT_EQ(back.labels(), ds.labels());
    for (std::size_t i = 0; i < ds.values().size(); ++i) {
        EXPECT_NEAR(back.values()[i], ds.values()[i], 1e-12);
    }
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "f0,f1,label");
}

TEST(Csv, RandomDatasetsRoundTrip) {
    GeneratorConfig cfg;
    cfg.d = 6;
    const auto gt = make_ground_truth(cfg);
    for (std::uint64_t s = 0; s < 5; ++s) {
        const auto ds = sample_d0(gt, 40, s);
        const auto path = temp_file("rand.csv");
        save_csv(ds, path);
        EXPECT_EQ(load_csv(path), ds); // shortest round-trip formatting is exact
    }
}

TEST(Csv, ErrorsNameTheRow) {
    const auto path = temp_file("bad.csv");
    {
        std::ofstream out(path);
        out << "a,b,label\n1,2,0\n3,4,2\n";
    }
    try {
        load_csv(path);
        FAIL() << "expected an error";
    } catch (const InvalidArgument& e) {
        EXPECT_NE(std::string(e.what()).find("row 3"), std::string::npos) << e.what();
        EXPECT_NE(std::string(e.what()).find("'2'"), std::string::npos) << e.what();
    }
    {
        std::ofstream out(path);
        out << "x,label\n1.5,1\nabc,0\n";
    }
    try {
        load_csv(path);
        FAIL() << "expected an error";
    } catch (const InvalidArgument& e) {
        EXPECT_NE(std::string(e.what()).find("row 3"), std::string::npos) << e.what();
    }
    {
        std::ofstream out(path);
        out << "x,y,label\n1,2\n";
    }
    EXPECT_THROW(load_csv(path), InvalidArgument);
    {
        std::ofstream out(path);
        out << "x,y,target\n1,2,0\n";
    }
    EXPECT_THROW(load_csv(path), InvalidArgument);
}

TEST(Csv, AcceptsArbitraryHeaderNamesWithLabelLast) {
    const auto path = temp_file("hdr.csv");
    {
        std::ofstream out(path);
        out << "age,score,label\n1,2,1\n3,4,0\n";
    }
    const auto ds = load_csv(path);
    EXPECT_EQ(ds.rows(), 2u);
    EXPECT_EQ(ds.cols(), 2u);
    EXPECT_EQ(ds.at(1, 1), 4.0);
}

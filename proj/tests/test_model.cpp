#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>

#include "deflatecrb/model.hpp"

using namespace deflatecrb;

TEST_CASE("dictionary entries have variance 1/N and are seed-deterministic") {
    const ProblemDims dims(100, 400, 10, 10);
    auto rng1 = make_stream(1);
    const Matrix h1 = gen_dictionary(dims, rng1);
    REQUIRE(h1.rows() == 100);
    REQUIRE(h1.cols() == 400);

    // sample-variance oracle over all 40000 entries
    const double mean = h1.mean();
    const double var = (h1.array() - mean).square().sum() / (h1.size() - 1);
    CHECK(var > 0.008);
    CHECK(var < 0.012);

    auto rng2 = make_stream(1);
    const Matrix h2 = gen_dictionary(dims, rng2);
    CHECK(h1 == h2);  // bitwise

    auto rng3 = make_stream(2);
    CHECK(gen_dictionary(dims, rng3) != h1);
}

TEST_CASE("dictionary columns have unit expected norm") {
    const ProblemDims dims(4, 8, 1, 1);
    auto rng = make_stream(7);
    const Matrix h = gen_dictionary(dims, rng);
    const double mean_norm = h.colwise().norm().mean();
    CHECK(mean_norm > 0.5);
    CHECK(mean_norm < 1.5);
}

TEST_CASE("rademacher dictionary entries are +-1/sqrt(N)") {
    const ProblemDims dims(16, 32, 2, 2);
    auto rng = make_stream(3);
    const Matrix h = gen_dictionary(dims, rng, EntryDist::Rademacher);
    const double s = 0.25;
    for (Eigen::Index j = 0; j < h.cols(); ++j)
        for (Eigen::Index i = 0; i < h.rows(); ++i)
            CHECK(std::abs(std::abs(h(i, j)) - s) < 1e-15);
}

TEST_CASE("steering dictionary with an impulse waveform reduces to the measurement matrix") {
    const ProblemDims dims(6, 12, 1, 1);
    auto g = [](double t) { return t == 0.0 ? 1.0 : 0.0; };
    auto rng1 = make_stream(11);
    const Matrix steered = gen_steering_dictionary(g, 1.0, dims, rng1);
    auto rng2 = make_stream(11);
    const Matrix psi = gen_dictionary(dims, rng2);
    CHECK((steered - psi).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("steering dictionary with a gaussian pulse is finite with nonzero columns") {
    const ProblemDims dims(32, 64, 2, 2);
    auto g = [](double t) { return std::exp(-0.5 * t * t); };
    auto rng = make_stream(5);
    const Matrix h = gen_steering_dictionary(g, 1.0, dims, rng);
    REQUIRE(h.allFinite());
    for (Eigen::Index j = 0; j < h.cols(); ++j) CHECK(h.col(j).norm() > 0.0);
}

TEST_CASE("steering dictionary rejects non-finite waveform samples") {
    const ProblemDims dims(4, 8, 1, 1);
    auto bad = [](double t) { return t == 0.0 ? std::numeric_limits<double>::infinity() : 0.0; };
    auto rng = make_stream(1);
    CHECK_THROWS_AS(gen_steering_dictionary(bad, 1.0, dims, rng), InvalidInput);
    auto g = [](double) { return 1.0; };
    CHECK_THROWS_AS(gen_steering_dictionary(g, 0.0, dims, rng), InvalidInput);
}

TEST_CASE("supports are disjoint, sorted and in range") {
    auto rng = make_stream(42);
    for (int rep = 0; rep < 100; ++rep) {
        const SupportPair sp = draw_supports(8, 2, 2, rng);
        REQUIRE(sp.t.size() == 2);
        REQUIRE(sp.t_tilde.size() == 2);
        CHECK(std::is_sorted(sp.t.begin(), sp.t.end()));
        CHECK(std::is_sorted(sp.t_tilde.begin(), sp.t_tilde.end()));
        for (auto i : sp.t) {
            CHECK(i >= 0);
            CHECK(i < 8);
            CHECK(std::find(sp.t_tilde.begin(), sp.t_tilde.end(), i) == sp.t_tilde.end());
        }
    }
}

TEST_CASE("supports with K = L_A + L_B partition the full index set") {
    auto rng = make_stream(9);
    const SupportPair sp = draw_supports(4, 2, 2, rng);
    std::set<Eigen::Index> all(sp.t.begin(), sp.t.end());
    all.insert(sp.t_tilde.begin(), sp.t_tilde.end());
    CHECK(all.size() == 4);
}

TEST_CASE("support draws are uniform") {
    auto rng = make_stream(123);
    std::vector<int> counts(10, 0);
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) {
        const SupportPair sp = draw_supports(10, 1, 1, rng);
        counts[sp.t[0]]++;
    }
    for (int c : counts) {
        const double freq = static_cast<double>(c) / draws;
        CHECK(freq > 0.08);
        CHECK(freq < 0.12);
    }
}

TEST_CASE("draw_supports rejects oversized requests") {
    auto rng = make_stream(1);
    CHECK_THROWS_AS(draw_supports(4, 3, 2, rng), InvalidInput);
}

TEST_CASE("amplitude priors") {
    auto rng = make_stream(77);
    SECTION("rademacher-scaled entries are +-sigma") {
        const Vector v = draw_amplitudes(5, 1.0, AmplitudePrior::RademacherScaled, rng);
        for (Eigen::Index i = 0; i < v.size(); ++i)
            CHECK(std::abs(std::abs(v[i]) - 1.0) < 1e-15);
    }
    SECTION("gaussian sample variance matches") {
        const Vector v = draw_amplitudes(100000, 10.0, AmplitudePrior::Gaussian, rng);
        const double mean = v.mean();
        const double var = (v.array() - mean).square().sum() / (v.size() - 1);
        CHECK(var > 9.7);
        CHECK(var < 10.3);
    }
    SECTION("zero variance rejected") {
        CHECK_THROWS_AS(draw_amplitudes(5, 0.0, AmplitudePrior::Gaussian, rng), InvalidInput);
    }
}

namespace {

SceneRealization make_scene(const ProblemDims& dims, double noise_var, std::uint64_t seed,
                            double sa2 = 1.0, double sb2 = 1.0) {
    auto rng = make_stream(seed);
    const Matrix h = gen_dictionary(dims, rng);
    const SupportPair sp = draw_supports(dims, rng);
    const Vector alpha = draw_amplitudes(dims.l_a, sa2, AmplitudePrior::Gaussian, rng);
    const Vector beta = draw_amplitudes(dims.l_b, sb2, AmplitudePrior::Gaussian, rng);
    return synthesize_observation(h, sp, alpha, beta, noise_var, rng);
}

} // namespace

TEST_CASE("observation equals noiseless model in the vanishing-noise limit") {
    const ProblemDims dims(20, 50, 3, 2);
    const SceneRealization scene = make_scene(dims, 1e-30, 4);
    const Vector clean = scene.a_psi() * scene.alpha + scene.b_psi() * scene.beta;
    CHECK((scene.y - clean).norm() <= 1e-12);
    CHECK((scene.full_sparse_vector().array() != 0.0).count() == dims.l());
    // consistency with the implied sparse vector
    CHECK((scene.h * scene.full_sparse_vector() - clean).norm() < 1e-12);
}

TEST_CASE("noise energy concentrates around N sigma^2") {
    const ProblemDims dims(100, 300, 5, 5);
    double avg = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        const SceneRealization scene = make_scene(dims, 1.0, 1000 + rep);
        const double e = scene.noise.squaredNorm() / dims.n;
        if (rep == 0) {
            CHECK(e > 0.7);
            CHECK(e < 1.3);
        }
        avg += e;
    }
    avg /= 100;
    CHECK(avg > 0.95);
    CHECK(avg < 1.05);
}

TEST_CASE("orthogonal complement annihilates the interference basis") {
    SECTION("standard basis vector") {
        Matrix b(4, 1);
        b << 1, 0, 0, 0;
        const Matrix u = orth_complement(b);
        REQUIRE(u.rows() == 4);
        REQUIRE(u.cols() == 3);
        CHECK((u.transpose() * b).cwiseAbs().maxCoeff() < 1e-12);
        // first row must vanish: <U> = span{e2,e3,e4}
        CHECK(u.row(0).cwiseAbs().maxCoeff() < 1e-12);
    }
    SECTION("random 100x10 residual oracle") {
        auto rng = make_stream(17);
        const Matrix b = gaussian_matrix(100, 10, 0.1, rng);
        const Matrix u = orth_complement(b);
        REQUIRE(u.cols() == 90);
        CHECK((u.transpose() * b).cwiseAbs().maxCoeff() <= 1e-10);
        const Matrix gram = u.transpose() * u;
        CHECK((gram - Matrix::Identity(90, 90)).cwiseAbs().maxCoeff() <= 1e-10);
    }
    SECTION("duplicated column raises") {
        auto rng = make_stream(18);
        Matrix b = gaussian_matrix(20, 3, 1.0, rng);
        b.col(2) = b.col(0);
        CHECK_THROWS_AS(orth_complement(b), NumericalFailure);
    }
}

TEST_CASE("deflation removes interference and preserves the signal part") {
    const ProblemDims dims(30, 80, 4, 3);
    auto rng = make_stream(21);
    const Matrix h = gen_dictionary(dims, rng);
    const SupportPair sp = draw_supports(dims, rng);
    const Matrix u = orth_complement(columns_at(h, sp.t_tilde));

    SECTION("alpha = 0: interference fully rejected") {
        const Vector beta = draw_amplitudes(dims.l_b, 4.0, AmplitudePrior::Gaussian, rng);
        SceneRealization scene;
        scene.h = h;
        scene.supports = sp;
        scene.alpha = Vector::Zero(dims.l_a);
        scene.beta = beta;
        scene.noise_var = 0.0;
        scene.noise = Vector::Zero(dims.n);
        scene.y = columns_at(h, sp.t_tilde) * beta;
        const DeflatedSystem d = deflate_system(u, scene);
        CHECK(d.y_bar.norm() <= 1e-10 * beta.norm());
    }
    SECTION("beta = 0: y_bar = F alpha exactly") {
        const Vector alpha = draw_amplitudes(dims.l_a, 1.0, AmplitudePrior::Gaussian, rng);
        SceneRealization scene;
        scene.h = h;
        scene.supports = sp;
        scene.alpha = alpha;
        scene.beta = Vector::Zero(dims.l_b);
        scene.noise_var = 0.0;
        scene.noise = Vector::Zero(dims.n);
        scene.y = columns_at(h, sp.t) * alpha;
        const DeflatedSystem d = deflate_system(u, scene);
        const Matrix f = d.f(sp);
        CHECK((d.y_bar - f * alpha).norm() < 1e-12);
        // F equals U^T A_psi entrywise
        CHECK((f - u.transpose() * columns_at(h, sp.t)).cwiseAbs().maxCoeff() < 1e-14);
    }
    SECTION("projection is a contraction") {
        const SceneRealization scene = make_scene(dims, 0.5, 23);
        const Matrix u2 = orth_complement(scene.b_psi());
        const DeflatedSystem d = deflate_system(u2, scene);
        CHECK(d.y_bar.squaredNorm() <= scene.y.squaredNorm() + 1e-12);
    }
}

TEST_CASE("perpendicular projector identities") {
    SECTION("e1 in R^3") {
        Matrix b(3, 1);
        b << 1, 0, 0;
        const Matrix p = projector_perp(b);
        Matrix expected = Matrix::Zero(3, 3);
        expected(1, 1) = expected(2, 2) = 1.0;
        CHECK((p - expected).cwiseAbs().maxCoeff() < 1e-12);
    }
    SECTION("trace, idempotence, symmetry, UU^T consistency") {
        auto rng = make_stream(31);
        const Matrix b = gaussian_matrix(100, 10, 0.1, rng);
        const Matrix p = projector_perp(b);
        CHECK(std::abs(p.trace() - 90.0) <= 1e-9);
        CHECK((p * p - p).cwiseAbs().maxCoeff() <= 1e-9);
        CHECK((p - p.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
        const Matrix u = orth_complement(b);
        CHECK((p - u * u.transpose()).cwiseAbs().maxCoeff() <= 1e-9);
    }
    SECTION("rank-deficient input raises") {
        Matrix b(5, 2);
        b.setZero();
        b.col(0).setOnes();
        b.col(1).setOnes();
        CHECK_THROWS_AS(projector_perp(b), NumericalFailure);
    }
}

TEST_CASE("isometry of the deflation basis") {
    auto rng = make_stream(57);
    const Matrix b = gaussian_matrix(50, 5, 1.0, rng);
    const Matrix u = orth_complement(b);
    const Matrix p = projector_perp(b);
    for (int i = 0; i < 1000; ++i) {
        const Vector v = gaussian_vector(50, 1.0, rng);
        CHECK((u.transpose() * v).norm() <= v.norm() + 1e-12);
        const Vector pv = p * v;
        CHECK(std::abs((u.transpose() * pv).norm() - pv.norm()) <= 1e-9);
    }
}

TEST_CASE("deflated dictionary entries match Lemma hypotheses for gaussian draws") {
    // F = U^T A_psi should look i.i.d. zero-mean with variance 1/N
    const ProblemDims dims(500, 1200, 50, 50);
    auto rng = make_stream(71);
    const Matrix h = gen_dictionary(dims, rng);
    const SupportPair sp = draw_supports(dims, rng);
    const Matrix u = orth_complement(columns_at(h, sp.t_tilde));
    const Matrix f = u.transpose() * columns_at(h, sp.t);
    const double count = static_cast<double>(f.size());
    const double mean = f.mean();
    CHECK(std::abs(mean) <= 3.0 / std::sqrt(count) / std::sqrt(dims.n));
    const double var = (f.array() - mean).square().sum() / (count - 1);
    CHECK(std::abs(var - 1.0 / dims.n) <= 0.05 / dims.n);
}

TEST_CASE("dims invariants are enforced") {
    CHECK_THROWS_AS(ProblemDims(10, 5, 2, 2), InvalidInput);   // K <= N
    CHECK_THROWS_AS(ProblemDims(10, 20, 6, 6), InvalidInput);  // N <= L
    CHECK_THROWS_AS(ProblemDims(10, 20, 1, 0), InvalidInput);  // L < 2
    CHECK_NOTHROW(ProblemDims(10, 20, 2, 0));                  // ideal model, L_B = 0

    const auto r = AsymptoticRatios::from_limits(10.0, 1.0);
    CHECK(r.rho_tilde == 9.0);
    CHECK(r.rho_bar == 5.0);
    CHECK_THROWS_AS(AsymptoticRatios::from_limits(1.5, 1.0), InvalidInput);
}

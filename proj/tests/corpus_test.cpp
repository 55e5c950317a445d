#include "csec/corpus.hpp"
#include "csec/kernel_pca.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <map>
#include <sstream>

namespace {

using csec::Bytes;

TEST(Base64, KnownVectors) {
  EXPECT_EQ(csec::base64_encode(""), "");
  EXPECT_EQ(csec::base64_encode("f"), "Zg==");
  EXPECT_EQ(csec::base64_encode("fo"), "Zm8=");
  EXPECT_EQ(csec::base64_encode("foo"), "Zm9v");
  EXPECT_EQ(csec::base64_encode("foobar"), "Zm9vYmFy");
  EXPECT_EQ(csec::base64_decode("Zm9vYg=="), "foob");
}

TEST(Base64, RoundTripsArbitraryBytes) {
  csec::RandomSource rng(1, 0);
  for (int t = 0; t < 500; ++t) {
    Bytes s;
    const auto len = rng.uniform_index(70);
    for (std::uint64_t i = 0; i < len; ++i) s.push_back(static_cast<char>(rng.uniform_index(256)));
    ASSERT_EQ(csec::base64_decode(csec::base64_encode(s)), s);
  }
}

TEST(Base64, RejectsMalformedText) {
  EXPECT_THROW(csec::base64_decode("Zm9"), std::invalid_argument);
  EXPECT_THROW(csec::base64_decode("Z=9v"), std::invalid_argument);
  EXPECT_THROW(csec::base64_decode("Zm9*"), std::invalid_argument);
}

TEST(CorpusFile, RoundTripWithHeader) {
  csec::Corpus c{2, {"GET /", Bytes("\0\n\r\xff", 4), "ab"}};
  std::stringstream ss;
  csec::write_corpus(ss, c);
  EXPECT_EQ(ss.str().substr(0, 14), "#corpus v1 k=2");
  const auto back = csec::read_corpus(ss);
  EXPECT_EQ(back.k, 2u);
  EXPECT_EQ(back.records, c.records);
}

TEST(CorpusFile, RejectsBadInput) {
  std::stringstream no_header("Zm9v\n");
  EXPECT_THROW(csec::read_corpus(no_header), std::runtime_error);
  std::stringstream bad_k("#corpus v1 k=x\n");
  EXPECT_THROW(csec::read_corpus(bad_k), std::runtime_error);
  std::stringstream bad_line("#corpus v1 k=1\nZm9v\n@@@@\n");
  EXPECT_THROW(csec::read_corpus(bad_line), std::runtime_error);
  std::stringstream too_short("#corpus v1 k=3\nZg==\n");
  EXPECT_THROW(csec::read_corpus(too_short), std::runtime_error);
  EXPECT_THROW(csec::load_corpus("/nonexistent/dir/corpus.txt"), std::runtime_error);
}

TEST(CorpusFile, SaveAndLoad) {
  const auto path = std::filesystem::temp_directory_path() / "csec_corpus_test.txt";
  csec::RandomSource rng(3, 0);
  const csec::Corpus c{3, csec::synth_corpus(rng, 20)};
  csec::save_corpus(path.string(), c);
  EXPECT_EQ(csec::load_corpus(path.string()).records, c.records);
  std::filesystem::remove(path);
}

TEST(SynthCorpus, DeterministicAndLongEnough) {
  csec::RandomSource a(11, 4), b(11, 4);
  const auto x = csec::synth_corpus(a, 100);
  const auto y = csec::synth_corpus(b, 100);
  EXPECT_EQ(x, y);
  ASSERT_EQ(x.size(), 100u);
  for (const auto& s : x) EXPECT_GE(s.size(), 3u);
  csec::RandomSource c(12, 4);
  EXPECT_NE(csec::synth_corpus(c, 100), x);
  EXPECT_THROW(csec::synth_corpus(c, 0), std::invalid_argument);
}

std::size_t intrinsic_dimension(double diversity) {
  csec::RandomSource rng(21, 0);
  const auto seqs = csec::synth_corpus(rng, 300, {diversity, 3});
  const auto K = csec::kernel_matrix(csec::extract_spectra(seqs, 3), {});
  return csec::kernel_pca(K, 0.99).components;
}

TEST(SynthCorpus, DiversityRaisesIntrinsicDimension) {
  const auto low = intrinsic_dimension(0.1);
  const auto mid = intrinsic_dimension(0.5);
  const auto high = intrinsic_dimension(1.0);
  EXPECT_LT(low, mid);
  EXPECT_LT(mid, high);
}

TEST(Rationalize, ReducesCounts) {
  const std::vector<double> c{0.5, 0.25};
  EXPECT_EQ(csec::rationalize(c, 4), (std::vector<std::uint64_t>{2, 1}));
  const std::vector<double> eq{3.0, 3.0};
  EXPECT_EQ(csec::rationalize(eq, 16), (std::vector<std::uint64_t>{1, 1}));
  const std::vector<double> zero{0.0, 0.0};
  EXPECT_THROW(csec::rationalize(zero), std::invalid_argument);
  const std::vector<double> neg{1.0, -0.1};
  EXPECT_THROW(csec::rationalize(neg), std::invalid_argument);
}

TEST(ApproximateSequence, Examples) {
  const std::vector<Bytes> basis{"GET /index", "POST /login"};
  const std::vector<double> first{1.0, 0.0};
  EXPECT_EQ(csec::approximate_sequence(first, basis), basis[0]);
  const std::vector<double> both{1.0, 1.0};
  EXPECT_EQ(csec::approximate_sequence(both, basis, 1), basis[0] + basis[1]);
  const std::vector<double> wrong{1.0};
  EXPECT_THROW(csec::approximate_sequence(wrong, basis), std::invalid_argument);
}

// Cosine between the produced sequence's spectrum and the exact weighted
// combination, computed with ordered maps.
double cosine_to_target(const Bytes& produced, const std::vector<double>& coeffs, const std::vector<Bytes>& basis,
                        std::size_t k) {
  std::map<Bytes, double> p, t;
  for (std::size_t i = 0; i + k <= produced.size(); ++i) p[produced.substr(i, k)] += 1.0;
  for (std::size_t j = 0; j < basis.size(); ++j)
    for (std::size_t i = 0; i + k <= basis[j].size(); ++i) t[basis[j].substr(i, k)] += coeffs[j];
  double dot = 0.0, np = 0.0, nt = 0.0;
  for (const auto& [g, v] : p) {
    np += v * v;
    if (auto it = t.find(g); it != t.end()) dot += v * it->second;
  }
  for (const auto& [g, v] : t) nt += v * v;
  return dot / std::sqrt(np * nt);
}

TEST(ApproximateSequence, SpectrumPointsAlongTarget) {
  csec::RandomSource rng(5, 0);
  const auto basis = csec::synth_corpus(rng, 2);
  const std::vector<double> coeffs{0.5, 0.25};
  const Bytes s = csec::approximate_sequence(coeffs, basis, 4);
  EXPECT_GE(cosine_to_target(s, coeffs, basis, 3), 0.9);
  const auto target = csec::combine_spectra(coeffs, basis, 3);
  for (std::size_t e = 1; e < target.size(); ++e) EXPECT_LT(target[e - 1].first, target[e].first);
}

TEST(ApproximateSequence, RandomCombinationsStayClose) {
  csec::RandomSource rng(6, 0);
  const auto basis = csec::synth_corpus(rng, 6);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> c(basis.size());
    for (auto& v : c) v = rng.uniform();
    EXPECT_GE(cosine_to_target(csec::approximate_sequence(c, basis, 16), c, basis, 3), 0.9);
  }
}

}  // namespace

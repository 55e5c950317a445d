#pragma once

// Synthetic request-like corpora, the line-based corpus file format, and
// reconstruction of byte sequences from spectrum-space combinations.

#include "kernel.hpp"
#include "random.hpp"

#include <boost/archive/iterators/base64_from_binary.hpp>
#include <boost/archive/iterators/binary_from_base64.hpp>
#include <boost/archive/iterators/dataflow_exception.hpp>
#include <boost/archive/iterators/transform_width.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace csec {

inline std::string base64_encode(std::string_view bytes) {
  namespace it = boost::archive::iterators;
  using Enc = it::base64_from_binary<it::transform_width<std::string_view::const_iterator, 6, 8>>;
  std::string out(Enc(bytes.begin()), Enc(bytes.end()));
  out.append((3 - bytes.size() % 3) % 3, '=');
  return out;
}

inline std::string base64_decode(std::string_view text) {
  namespace it = boost::archive::iterators;
  using Dec = it::transform_width<it::binary_from_base64<std::string_view::const_iterator>, 8, 6>;
  if (text.size() % 4 != 0) throw std::invalid_argument("base64: length is not a multiple of 4");
  std::size_t pad = 0;
  while (pad < 2 && pad < text.size() && text[text.size() - 1 - pad] == '=') ++pad;
  const std::string_view body = text.substr(0, text.size() - pad);
  if (body.find('=') != std::string_view::npos) throw std::invalid_argument("base64: misplaced padding");
  try {
    std::string out(Dec(body.begin()), Dec(body.end()));
    out.resize(text.size() / 4 * 3 - pad);
    return out;
  } catch (const it::dataflow_exception&) {
    throw std::invalid_argument("base64: invalid character");
  }
}

struct Corpus {
  std::size_t k = 3;
  std::vector<Bytes> records;
};

inline void write_corpus(std::ostream& os, const Corpus& c) {
  os << "#corpus v1 k=" << c.k << '\n';
  for (const auto& r : c.records) os << base64_encode(r) << '\n';
}

inline Corpus read_corpus(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("corpus: missing header line");
  const std::string prefix = "#corpus v1 k=";
  if (line.rfind(prefix, 0) != 0) throw std::runtime_error("corpus: bad header '" + line + "'");
  Corpus c;
  try {
    std::size_t used = 0;
    const auto k = std::stoul(line.substr(prefix.size()), &used);
    if (used != line.size() - prefix.size() || k < 1) throw std::invalid_argument("k");
    c.k = k;
  } catch (const std::exception&) {
    throw std::runtime_error("corpus: bad k in header '" + line + "'");
  }
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      c.records.push_back(base64_decode(line));
      if (c.records.back().size() < c.k) throw std::invalid_argument("record shorter than k");
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error("corpus: line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return c;
}

inline void save_corpus(const std::string& path, const Corpus& c) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_corpus(os, c);
  if (!os) throw std::runtime_error("write to '" + path + "' failed");
}

inline Corpus load_corpus(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open '" + path + "' for reading");
  try {
    return read_corpus(is);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

/// Knobs of the synthetic request generator. `diversity` in [0, 1] scales
/// the number of active templates, the path/parameter vocabulary and the
/// share of random bytes together.
struct SynthParams {
  double diversity = 0.5;
  std::size_t min_length = 3;
};

namespace detail {

inline constexpr std::array<std::string_view, 8> kMethods = {"GET", "GET", "POST", "GET", "HEAD", "GET", "PUT", "GET"};
inline constexpr std::array<std::string_view, 8> kHeaders = {
    "Host: www.example.org\r\nUser-Agent: Mozilla/5.0\r\n",
    "Host: intranet.local\r\nAccept: text/html\r\n",
    "Host: api.example.org\r\nContent-Type: application/json\r\n",
    "Host: www.example.org\r\nAccept-Language: en\r\nConnection: keep-alive\r\n",
    "Host: static.example.org\r\nCache-Control: no-cache\r\n",
    "Host: mail.example.org\r\nCookie: sid=0\r\n",
    "Host: shop.example.org\r\nReferer: http://shop.example.org/\r\n",
    "Host: cdn.example.org\r\nAccept-Encoding: gzip\r\n"};
inline constexpr std::array<std::string_view, 24> kWords = {
    "index", "news",  "images", "login", "search", "cart",   "user",  "admin", "static", "docs",  "api",   "v1",
    "blog",  "about", "media",  "files", "page",   "report", "order", "item",  "view",   "edit",  "query", "data"};

inline std::string word(RandomSource& rng, std::size_t vocab, double noise) {
  if (rng.bernoulli(noise)) {
    std::string w;
    const auto len = 3 + rng.uniform_index(6);
    for (std::uint64_t c = 0; c < len; ++c) w.push_back(static_cast<char>('a' + rng.uniform_index(26)));
    return w;
  }
  return std::string(kWords[rng.uniform_index(std::min<std::size_t>(vocab, kWords.size()))]);
}

}  // namespace detail

inline std::vector<Bytes> synth_corpus(RandomSource& rng, std::size_t size, const SynthParams& params = {}) {
  if (size < 1) throw std::invalid_argument("synth_corpus: size must be >= 1");
  const double dv = std::clamp(params.diversity, 0.0, 1.0);
  const std::size_t templates = 1 + static_cast<std::size_t>(std::lround(dv * 7.0));
  const std::size_t vocab = 2 + static_cast<std::size_t>(std::lround(dv * 22.0));
  const double noise = 0.3 * dv;
  const std::size_t max_segments = 1 + static_cast<std::size_t>(std::lround(dv * 3.0));
  std::vector<Bytes> out;
  out.reserve(size);
  for (std::size_t s = 0; s < size; ++s) {
    const auto t = rng.uniform_index(templates);
    std::string req(detail::kMethods[t]);
    req += " /";
    const auto segs = 1 + rng.uniform_index(max_segments);
    for (std::uint64_t g = 0; g < segs; ++g) {
      if (g) req += '/';
      req += detail::word(rng, vocab, noise);
    }
    if (rng.bernoulli(0.2 + 0.5 * dv)) {
      req += '?';
      req += detail::word(rng, vocab, noise);
      req += '=';
      req += std::to_string(rng.uniform_index(10 + static_cast<std::uint64_t>(dv * 990.0)));
    }
    req += " HTTP/1.1\r\n";
    req += detail::kHeaders[t];
    req += "\r\n";
    while (req.size() < params.min_length) req += ' ';
    out.push_back(std::move(req));
  }
  return out;
}

/// Repetition counts for a nonnegative combination: coefficients scaled so
/// the largest maps to max_denominator, rounded, then reduced by their gcd.
inline std::vector<std::uint64_t> rationalize(std::span<const double> coefficients, std::uint64_t max_denominator = 16) {
  if (max_denominator < 1) throw std::invalid_argument("rationalize: denominator bound must be >= 1");
  double top = 0.0;
  for (double c : coefficients) {
    if (!(c >= 0.0) || !std::isfinite(c)) throw std::invalid_argument("rationalize: coefficients must be finite and >= 0");
    top = std::max(top, c);
  }
  if (top == 0.0) throw std::invalid_argument("rationalize: all coefficients are zero");
  std::vector<std::uint64_t> counts;
  std::uint64_t g = 0;
  for (double c : coefficients) {
    const auto v = static_cast<std::uint64_t>(std::llround(c / top * static_cast<double>(max_denominator)));
    counts.push_back(v);
    g = std::gcd(g, v);
  }
  for (auto& v : counts) v /= g;
  return counts;
}

/// Concatenation of basis sequences repeated according to the rationalized
/// coefficients. Its spectrum equals the combination up to the k-grams that
/// straddle the joins.
inline Bytes approximate_sequence(std::span<const double> coefficients, std::span<const Bytes> basis,
                                  std::uint64_t max_denominator = 16) {
  if (coefficients.size() != basis.size())
    throw std::invalid_argument("approximate_sequence: coefficient and basis counts differ");
  const auto counts = rationalize(coefficients, max_denominator);
  Bytes out;
  for (std::size_t j = 0; j < basis.size(); ++j)
    for (std::uint64_t r = 0; r < counts[j]; ++r) out += basis[j];
  return out;
}

/// The exact combination sum_j c_j phi(basis_j) as a sparse spectrum with
/// real weights (k-gram, weight), sorted by k-gram.
inline std::vector<std::pair<Bytes, double>> combine_spectra(std::span<const double> coefficients,
                                                            std::span<const Bytes> basis, std::size_t k) {
  std::vector<std::pair<Bytes, double>> all;
  for (std::size_t j = 0; j < basis.size(); ++j) {
    if (coefficients[j] == 0.0) continue;
    for (const auto& [g, c] : extract_spectrum(basis[j], k).entries)
      all.emplace_back(g, coefficients[j] * static_cast<double>(c));
  }
  std::sort(all.begin(), all.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  std::vector<std::pair<Bytes, double>> out;
  for (auto& e : all) {
    if (!out.empty() && out.back().first == e.first) out.back().second += e.second;
    else out.push_back(std::move(e));
  }
  return out;
}

}  // namespace csec

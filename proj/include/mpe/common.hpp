#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <filesystem>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mpe {

// Bad input data or arguments. The CLI maps this to exit status 1.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
  ValidationError(const std::string& file, std::size_t line, const std::string& what)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + what) {}
};

// Entailment classes. The numeric order (E, N, C) is the logit and report order everywhere.
enum class Label : std::uint8_t { Entailment = 0, Neutral = 1, Contradiction = 2 };

inline constexpr std::size_t kNumLabels = 3;
inline constexpr std::array<Label, kNumLabels> kAllLabels = {Label::Entailment, Label::Neutral,
                                                             Label::Contradiction};

inline std::size_t label_index(Label l) { return static_cast<std::size_t>(l); }
inline Label label_from_index(std::size_t i) {
  if (i >= kNumLabels) throw std::out_of_range("label index " + std::to_string(i));
  return static_cast<Label>(i);
}

char label_char(Label l);
// Accepts E/N/C and the long forms (entailment, neutral, contradiction), case-insensitive.
std::optional<Label> parse_label(std::string_view s);

using LabelCounts = std::array<int, kNumLabels>;

enum class Split : std::uint8_t { Train = 0, Dev = 1, Test = 2 };
inline constexpr std::size_t kNumSplits = 3;
const char* split_name(Split s);
std::optional<Split> parse_split(std::string_view s);

// Deterministic random source. The distributions are implemented here rather than
// through <random> so that sampled datasets and initializations are identical across
// standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform integer in [0, n). n must be > 0.
  std::size_t index(std::size_t n);
  // Uniform double in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  // Derives an independent stream, e.g. one per training epoch.
  Rng fork() { return Rng(next() ^ 0x9e3779b97f4a7c15ULL); }

 private:
  std::mt19937_64 engine_;
};

// String helpers shared by the file readers.
std::vector<std::string> split(std::string_view s, char delim);
std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// One line of a text file with its 1-based line number. Blank lines and lines
// starting with '#' are skipped when skip_comments is set.
struct NumberedLine {
  std::size_t number;
  std::string text;
};
std::vector<NumberedLine> read_lines(const std::filesystem::path& path, bool skip_comments = true);
std::string read_file(const std::filesystem::path& path);

// Writes to a temporary sibling and renames it into place, so a failed run never
// leaves a partial output file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

// 64-bit FNV-1a, used for config hashes and file fingerprints in manifests.
std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t v);

// Directory holding the shipped lexicon files: $MPE_DATA_DIR if set, otherwise the
// directory configured at build time.
std::filesystem::path default_data_dir();

// Runs fn(i) for i in [0, n) on up to `workers` threads (0 = hardware concurrency).
// fn must only touch state owned by index i. The first exception is rethrown.
template <typename F>
void parallel_for(std::size_t n, F&& fn, std::size_t workers = 0) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> threads;
    for (std::size_t w = 0; w < workers; ++w) {
      threads.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace mpe

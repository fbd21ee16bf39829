#include "dali/array.hpp"

#include <cmath>
#include <new>
#include <unordered_map>
#include <vector>

#include "dali/errors.hpp"

namespace dali {

namespace {

// Per-thread free lists keyed by element count. Training shapes repeat every
// step, so nearly all requests hit the list. Buckets are capped; overflow
// goes back to the system allocator.
struct BufferPool {
  std::unordered_map<std::size_t, std::vector<double*>> free_lists;
  ~BufferPool() {
    for (auto& [n, list] : free_lists) {
      (void)n;
      for (double* p : list) ::operator delete(p);
    }
  }
};

thread_local BufferPool t_pool;

constexpr std::size_t kMaxPerBucket = 64;

}  // namespace

double* Array::acquire(std::size_t n) {
  if (n == 0) return nullptr;
  auto it = t_pool.free_lists.find(n);
  if (it != t_pool.free_lists.end() && !it->second.empty()) {
    double* p = it->second.back();
    it->second.pop_back();
    return p;
  }
  return static_cast<double*>(::operator new(n * sizeof(double)));
}

void Array::give_back(std::size_t n, double* p) {
  auto& list = t_pool.free_lists[n];
  if (list.size() < kMaxPerBucket) {
    list.push_back(p);
  } else {
    ::operator delete(p);
  }
}

Array Array::full(int rows, int cols, double v) {
  Array a(rows, cols);
  a.fill(v);
  return a;
}

Array Array::scalar(double v) {
  Array a(1, 1);
  a[0] = v;
  return a;
}

Array Array::row(std::initializer_list<double> values) {
  Array a(1, static_cast<int>(values.size()));
  int j = 0;
  for (double v : values) a[j++] = v;
  return a;
}

Array Array::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const int r = static_cast<int>(rows.size());
  const int c = r > 0 ? static_cast<int>(rows.begin()->size()) : 0;
  Array a(r, c);
  int i = 0;
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != c)
      throw DimensionError("from_rows: ragged initializer");
    int j = 0;
    for (double v : row) a.at(i, j++) = v;
    ++i;
  }
  return a;
}

std::string Array::shape_str() const {
  return "[" + std::to_string(rows_) + "x" + std::to_string(cols_) + "]";
}

bool Array::all_finite() const {
  for (std::size_t i = 0, n = size(); i < n; ++i) {
    if (!std::isfinite(data_[i])) return false;
  }
  return true;
}

}  // namespace dali

#pragma once

#include <cstddef>
#include <cstring>
#include <initializer_list>
#include <string>

namespace dali {

/// Dense row-major 64-bit real array, rank <= 2. Row vectors are 1xN,
/// scalars 1x1. Backing buffers come from a thread-local size-keyed pool:
/// tapes allocate and free the same shapes every training step, so reuse
/// avoids most allocator traffic. Buffers freed on one thread go to that
/// thread's pool; an Array itself may be handed to another thread.
class Array {
 public:
  Array() = default;
  Array(int rows, int cols) : Array(rows, cols, true) {}
  ~Array() { release(); }

  Array(const Array& o) : rows_(o.rows_), cols_(o.cols_) {
    if (o.data_) {
      data_ = acquire(size());
      std::memcpy(data_, o.data_, size() * sizeof(double));
    }
  }
  Array& operator=(const Array& o) {
    if (this == &o) return *this;
    if (o.size() != size() || !data_) {
      release();
      rows_ = o.rows_;
      cols_ = o.cols_;
      data_ = o.data_ ? acquire(o.size()) : nullptr;
    } else {
      rows_ = o.rows_;
      cols_ = o.cols_;
    }
    if (o.data_) std::memcpy(data_, o.data_, o.size() * sizeof(double));
    return *this;
  }
  Array(Array&& o) noexcept : rows_(o.rows_), cols_(o.cols_), data_(o.data_) {
    o.rows_ = o.cols_ = 0;
    o.data_ = nullptr;
  }
  Array& operator=(Array&& o) noexcept {
    if (this == &o) return *this;
    release();
    rows_ = o.rows_;
    cols_ = o.cols_;
    data_ = o.data_;
    o.rows_ = o.cols_ = 0;
    o.data_ = nullptr;
    return *this;
  }

  static Array zeros(int rows, int cols) { return Array(rows, cols); }
  /// Buffer left uninitialized; every element must be written before use.
  static Array uninit(int rows, int cols) { return Array(rows, cols, false); }
  static Array full(int rows, int cols, double v);
  static Array scalar(double v);
  static Array row(std::initializer_list<double> values);
  static Array from_rows(std::initializer_list<std::initializer_list<double>> rows);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const {
    return static_cast<std::size_t>(rows_) * static_cast<std::size_t>(cols_);
  }
  bool empty() const { return size() == 0; }

  double* data() { return data_; }
  const double* data() const { return data_; }

  double& at(int i, int j) { return data_[static_cast<std::size_t>(i) * cols_ + j]; }
  double at(int i, int j) const { return data_[static_cast<std::size_t>(i) * cols_ + j]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  bool same_shape(const Array& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  bool is_scalar() const { return size() == 1; }

  void fill(double v) {
    for (std::size_t i = 0, n = size(); i < n; ++i) data_[i] = v;
  }

  /// "[RxC]" for error messages.
  std::string shape_str() const;

  bool all_finite() const;

  friend bool operator==(const Array& a, const Array& b) {
    if (a.rows_ != b.rows_ || a.cols_ != b.cols_) return false;
    if (a.size() == 0) return true;
    return std::memcmp(a.data_, b.data_, a.size() * sizeof(double)) == 0;
  }

 private:
  Array(int rows, int cols, bool zeroed) : rows_(rows), cols_(cols) {
    data_ = acquire(size());
    if (zeroed && data_) std::memset(data_, 0, size() * sizeof(double));
  }

  static double* acquire(std::size_t n);
  static void give_back(std::size_t n, double* p);
  void release() {
    if (data_) give_back(size(), data_);
    data_ = nullptr;
    rows_ = cols_ = 0;
  }

  int rows_ = 0;
  int cols_ = 0;
  double* data_ = nullptr;
};

}  // namespace dali

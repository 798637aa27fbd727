#include "mipipe/design.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>

namespace mipipe {

std::vector<int> Design::samples_of(int condition) const {
  std::vector<int> out;
  for (int j = 0; j < n_samples(); ++j) {
    if (condition_index[static_cast<std::size_t>(j)] == condition) out.push_back(j);
  }
  return out;
}

int Design::condition_of(const std::string& sample_id) const {
  for (std::size_t j = 0; j < sample_ids.size(); ++j) {
    if (sample_ids[j] == sample_id) return condition_index[j];
  }
  return -1;
}

Design Design::aligned_to(const std::vector<std::string>& ordered_sample_ids) const {
  if (ordered_sample_ids.size() != sample_ids.size()) {
    throw std::invalid_argument("design: sample count disagrees with matrix columns");
  }
  std::unordered_map<std::string, int> pos;
  for (std::size_t j = 0; j < sample_ids.size(); ++j) pos.emplace(sample_ids[j], static_cast<int>(j));
  std::vector<std::string> labels;
  labels.reserve(ordered_sample_ids.size());
  for (const auto& id : ordered_sample_ids) {
    auto it = pos.find(id);
    if (it == pos.end()) {
      throw std::invalid_argument("design: sample '" + id + "' not present in design");
    }
    labels.push_back(conditions[static_cast<std::size_t>(condition_index[static_cast<std::size_t>(it->second)])]);
  }
  return from_assignments(ordered_sample_ids, labels);
}

Design Design::from_assignments(const std::vector<std::string>& sample_ids,
                                const std::vector<std::string>& condition_labels) {
  if (sample_ids.size() != condition_labels.size()) {
    throw std::invalid_argument("design: sample and condition lists differ in length");
  }
  Design d;
  d.sample_ids = sample_ids;
  std::unordered_map<std::string, int> cond_pos;
  {
    std::unordered_map<std::string, int> seen;
    for (const auto& id : sample_ids) {
      if (++seen[id] > 1) throw std::invalid_argument("design: sample '" + id + "' listed twice");
    }
  }
  d.condition_index.reserve(sample_ids.size());
  for (const auto& label : condition_labels) {
    auto it = cond_pos.find(label);
    if (it == cond_pos.end()) {
      it = cond_pos.emplace(label, static_cast<int>(d.conditions.size())).first;
      d.conditions.push_back(label);
    }
    d.condition_index.push_back(it->second);
  }
  const int n = d.n_samples();
  const int k = d.n_conditions();
  d.group_sizes.assign(static_cast<std::size_t>(k), 0);
  for (int idx : d.condition_index) ++d.group_sizes[static_cast<std::size_t>(idx)];
  for (int g = 0; g < k; ++g) {
    if (d.group_sizes[static_cast<std::size_t>(g)] < 2) {
      throw std::invalid_argument("design: condition '" + d.conditions[static_cast<std::size_t>(g)] +
                                  "' has fewer than 2 samples");
    }
  }
  d.X = Eigen::MatrixXd::Zero(n, k);
  for (int j = 0; j < n; ++j) d.X(j, d.condition_index[static_cast<std::size_t>(j)]) = 1.0;
  return d;
}

Contrast make_contrast(const Design& d, int a, int b) {
  if (a == b || a < 0 || b < 0 || a >= d.n_conditions() || b >= d.n_conditions()) {
    throw std::invalid_argument("contrast: indices must be distinct and within range");
  }
  return Contrast{a, b};
}

std::vector<Contrast> all_pairs(const Design& d) {
  std::vector<Contrast> out;
  for (int i = 0; i < d.n_conditions(); ++i) {
    for (int j = i + 1; j < d.n_conditions(); ++j) {
      out.push_back(Contrast{j, i});  // later condition minus earlier
    }
  }
  return out;
}

std::string contrast_name(const Design& d, const Contrast& c) {
  return d.conditions[static_cast<std::size_t>(c.a)] + "-vs-" +
         d.conditions[static_cast<std::size_t>(c.b)];
}

}  // namespace mipipe

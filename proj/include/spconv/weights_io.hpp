#pragma once

// GAL (binary neighbor lists) and GWT (weighted pair lines) weight files.
//
//   GAL:  0 <n> <dataset-name> <id-column>
//         <id> <k>
//         <neighbor ids...>
//   GWT:  0 <n> <dataset-name> <id-column>
//         <id_i> <id_j> <weight>
//
// Region order comes from `ids` when given. Otherwise GAL uses block order
// and GWT the order of first appearance, which requires every region to
// occur in at least one pair.

#include "spconv/weights.hpp"

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace spconv {

enum class WeightFormat { Gal, Gwt };

WeightFormat parse_weight_format(std::string_view text);
WeightFormat weight_format_from_path(const std::string& path);

struct WeightFileHeader {
  std::string dataset_name = "spconv";
  std::string id_column = "id";
};

WeightMatrixd read_weights(std::istream& in, WeightFormat format,
                           const std::vector<std::string>& ids = {});
WeightMatrixd read_weights_file(const std::string& path, WeightFormat format,
                                const std::vector<std::string>& ids = {});

void write_weights(std::ostream& out, const WeightMatrixd& w, WeightFormat format,
                   const WeightFileHeader& header = {});
void write_weights_file(const std::string& path, const WeightMatrixd& w, WeightFormat format,
                        const WeightFileHeader& header = {});

}  // namespace spconv

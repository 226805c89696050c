#pragma once

#include <filesystem>
#include <string>

#include "rwk/graph.hpp"

namespace rwk {

// Reads a graph collection in the common benchmark text layout:
//   <name>_A.txt               1-based "u, v" edge pairs over all vertices
//   <name>_graph_indicator.txt graph id (1-based) of every vertex
//   <name>_graph_labels.txt    one class token per graph
//   <name>_node_labels.txt     optional categorical vertex labels
//   <name>_node_attributes.txt optional comma separated real attributes
//
// Features are the node attributes when present, otherwise a one-hot encoding
// of the node labels over the dataset-wide label dictionary, otherwise a
// one-hot encoding of vertex degrees.
Dataset load_dataset(const std::filesystem::path& dir, const std::string& name);

// Writes the files load_dataset reads. Node labels and attributes are only
// emitted when the dataset carries them.
void write_dataset(const Dataset& dataset, const std::filesystem::path& dir);

}  // namespace rwk

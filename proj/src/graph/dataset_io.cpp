#include "rwk/dataset_io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>

#include "rwk/error.hpp"

namespace rwk {
namespace {

namespace fs = std::filesystem;

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string> read_lines(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw IngestionError(fmt::format("cannot read {}", file.string()));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    auto t = trim(line);
    if (!t.empty()) lines.push_back(std::move(t));
  }
  return lines;
}

long long parse_int(const std::string& token, const fs::path& file, std::size_t line) {
  long long value = 0;
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw IntegrityError(fmt::format("{}:{}: expected an integer, got '{}'", file.string(), line + 1, token));
  }
  return value;
}

double parse_real(const std::string& token, const fs::path& file, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(token, &used);
    if (used != token.size()) throw std::invalid_argument(token);
    return v;
  } catch (const std::exception&) {
    throw IntegrityError(fmt::format("{}:{}: expected a real, got '{}'", file.string(), line + 1, token));
  }
}

bool all_integers(const std::vector<std::string>& tokens) {
  return std::all_of(tokens.begin(), tokens.end(), [](const std::string& t) {
    long long v = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    return ec == std::errc() && ptr == t.data() + t.size();
  });
}

// Class tokens in canonical order: numeric when every token is an integer.
std::vector<std::string> ordered_tokens(std::vector<std::string> tokens) {
  std::sort(tokens.begin(), tokens.end());
  tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
  if (all_integers(tokens)) {
    std::sort(tokens.begin(), tokens.end(),
              [](const std::string& a, const std::string& b) { return std::stoll(a) < std::stoll(b); });
  }
  return tokens;
}

Matrix one_hot(const std::vector<int>& values, const std::map<int, int>& dictionary) {
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(values.size()), static_cast<Eigen::Index>(dictionary.size()));
  for (std::size_t i = 0; i < values.size(); ++i) out(static_cast<Eigen::Index>(i), dictionary.at(values[i])) = 1.0;
  return out;
}

std::string format_real(double v) { return fmt::format("{:.17g}", v); }

void write_lines(const fs::path& file, const std::vector<std::string>& lines) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IngestionError(fmt::format("cannot write {}", file.string()));
  for (const auto& l : lines) out << l << '\n';
}

}  // namespace

Dataset load_dataset(const fs::path& dir, const std::string& name) {
  const auto file = [&](const char* suffix) { return dir / fmt::format("{}_{}.txt", name, suffix); };
  for (const char* required : {"A", "graph_indicator", "graph_labels"}) {
    if (!fs::exists(file(required))) {
      throw IngestionError(fmt::format("missing mandatory file {}", file(required).string()));
    }
  }

  const auto indicator_lines = read_lines(file("graph_indicator"));
  const auto label_lines = read_lines(file("graph_labels"));
  const std::size_t vertex_count = indicator_lines.size();

  std::vector<int> graph_of(vertex_count);
  int max_graph = 0;
  for (std::size_t v = 0; v < vertex_count; ++v) {
    const auto id = parse_int(indicator_lines[v], file("graph_indicator"), v);
    if (id < 1) throw IntegrityError(fmt::format("graph id {} on line {} is not positive", id, v + 1));
    if (v > 0 && id < graph_of[v - 1] + 1) {
      throw IntegrityError(fmt::format("graph indicator is not sorted at line {}", v + 1));
    }
    graph_of[v] = static_cast<int>(id) - 1;
    max_graph = std::max(max_graph, static_cast<int>(id));
  }
  const auto graph_count = static_cast<std::size_t>(max_graph);
  if (label_lines.size() != graph_count) {
    throw IntegrityError(fmt::format("{} graph labels for {} graphs in the indicator file", label_lines.size(),
                                     graph_count));
  }

  // Vertex ranges per graph; the indicator is sorted so each graph is contiguous.
  std::vector<std::size_t> first(graph_count + 1, vertex_count);
  for (std::size_t v = vertex_count; v-- > 0;) first[static_cast<std::size_t>(graph_of[v])] = v;
  for (std::size_t gi = graph_count; gi-- > 0;) {
    if (first[gi] >= first[gi + 1]) throw IntegrityError(fmt::format("graph {} has no vertices", gi + 1));
  }

  std::optional<std::vector<int>> node_labels;
  if (fs::exists(file("node_labels"))) {
    const auto lines = read_lines(file("node_labels"));
    if (lines.size() != vertex_count) {
      throw IntegrityError(fmt::format("{} node labels for {} vertices", lines.size(), vertex_count));
    }
    node_labels.emplace(vertex_count);
    for (std::size_t v = 0; v < vertex_count; ++v) {
      (*node_labels)[v] = static_cast<int>(parse_int(split_commas(lines[v]).front(), file("node_labels"), v));
    }
  }

  std::optional<Matrix> attributes;
  if (fs::exists(file("node_attributes"))) {
    const auto lines = read_lines(file("node_attributes"));
    if (lines.size() != vertex_count) {
      throw IntegrityError(fmt::format("{} attribute rows for {} vertices", lines.size(), vertex_count));
    }
    Eigen::Index width = -1;
    for (std::size_t v = 0; v < vertex_count; ++v) {
      const auto tokens = split_commas(lines[v]);
      if (width < 0) {
        width = static_cast<Eigen::Index>(tokens.size());
        attributes.emplace(static_cast<Eigen::Index>(vertex_count), width);
      }
      if (static_cast<Eigen::Index>(tokens.size()) != width) {
        throw IntegrityError(fmt::format("attribute row {} has {} values, expected {}", v + 1, tokens.size(), width));
      }
      for (Eigen::Index c = 0; c < width; ++c) {
        (*attributes)(static_cast<Eigen::Index>(v), c) =
            parse_real(tokens[static_cast<std::size_t>(c)], file("node_attributes"), v);
      }
    }
  }

  std::vector<std::vector<std::pair<int, int>>> edges(graph_count);
  const auto edge_lines = read_lines(file("A"));
  for (std::size_t e = 0; e < edge_lines.size(); ++e) {
    const auto tokens = split_commas(edge_lines[e]);
    if (tokens.size() != 2) throw IntegrityError(fmt::format("edge line {} is not a pair", e + 1));
    const auto a = parse_int(tokens[0], file("A"), e) - 1;
    const auto b = parse_int(tokens[1], file("A"), e) - 1;
    if (a < 0 || b < 0 || a >= static_cast<long long>(vertex_count) || b >= static_cast<long long>(vertex_count)) {
      throw IntegrityError(fmt::format("edge line {} references a vertex outside [1, {}]", e + 1, vertex_count));
    }
    const int ga = graph_of[static_cast<std::size_t>(a)];
    if (ga != graph_of[static_cast<std::size_t>(b)]) {
      throw IntegrityError(fmt::format("edge line {} connects two different graphs", e + 1));
    }
    const auto base = static_cast<long long>(first[static_cast<std::size_t>(ga)]);
    edges[static_cast<std::size_t>(ga)].emplace_back(static_cast<int>(a - base), static_cast<int>(b - base));
  }

  Dataset dataset;
  dataset.name = name;
  dataset.class_tokens = ordered_tokens(label_lines);
  dataset.class_count = static_cast<int>(dataset.class_tokens.size());
  dataset.has_attributes = attributes.has_value();
  std::map<std::string, int> class_index;
  for (std::size_t c = 0; c < dataset.class_tokens.size(); ++c) class_index[dataset.class_tokens[c]] = static_cast<int>(c);

  // Dataset-global dictionary used for one-hot encodings.
  std::map<int, int> dictionary;
  std::vector<Graph> raw;
  raw.reserve(graph_count);
  for (std::size_t gi = 0; gi < graph_count; ++gi) {
    const auto lo = first[gi];
    const auto hi = first[gi + 1];
    const auto n = static_cast<Eigen::Index>(hi - lo);
    std::optional<std::vector<int>> labels;
    if (node_labels) labels.emplace(node_labels->begin() + static_cast<std::ptrdiff_t>(lo),
                                    node_labels->begin() + static_cast<std::ptrdiff_t>(hi));
    Matrix features = attributes ? Matrix(attributes->middleRows(static_cast<Eigen::Index>(lo), n))
                                 : Matrix::Zero(n, 1);
    raw.push_back(Graph::from_edges(n, edges[gi], std::move(features), std::move(labels),
                                    class_index.at(label_lines[gi])));
  }

  if (!attributes) {
    for (const auto& g : raw) {
      const auto& values = g.node_labels ? *g.node_labels : g.degrees;
      for (int v : values) dictionary.emplace(v, 0);
    }
    int next = 0;
    for (auto& [value, index] : dictionary) index = next++;
    for (auto& g : raw) g.features = one_hot(g.node_labels ? *g.node_labels : g.degrees, dictionary);
  }
  dataset.graphs = std::move(raw);
  dataset.validate();
  return dataset;
}

void write_dataset(const Dataset& dataset, const fs::path& dir) {
  fs::create_directories(dir);
  const auto file = [&](const char* suffix) { return dir / fmt::format("{}_{}.txt", dataset.name, suffix); };

  std::vector<std::string> edges, indicator, graph_labels, node_labels, attributes;
  const bool with_labels = !dataset.graphs.empty() &&
                           std::all_of(dataset.graphs.begin(), dataset.graphs.end(),
                                       [](const Graph& g) { return g.node_labels.has_value(); });
  std::size_t offset = 1;
  for (std::size_t gi = 0; gi < dataset.graphs.size(); ++gi) {
    const auto& g = dataset.graphs[gi];
    for (const auto& [a, b] : g.edge_list()) {
      edges.push_back(fmt::format("{}, {}", offset + static_cast<std::size_t>(a), offset + static_cast<std::size_t>(b)));
      edges.push_back(fmt::format("{}, {}", offset + static_cast<std::size_t>(b), offset + static_cast<std::size_t>(a)));
    }
    for (Eigen::Index v = 0; v < g.size(); ++v) {
      indicator.push_back(std::to_string(gi + 1));
      if (with_labels) node_labels.push_back(std::to_string((*g.node_labels)[static_cast<std::size_t>(v)]));
      if (dataset.has_attributes) {
        std::string row;
        for (Eigen::Index c = 0; c < g.features.cols(); ++c) {
          if (c > 0) row += ", ";
          row += format_real(g.features(v, c));
        }
        attributes.push_back(std::move(row));
      }
    }
    graph_labels.push_back(dataset.class_tokens.empty() ? std::to_string(g.graph_label)
                                                        : dataset.class_tokens.at(static_cast<std::size_t>(g.graph_label)));
    offset += static_cast<std::size_t>(g.size());
  }
  write_lines(file("A"), edges);
  write_lines(file("graph_indicator"), indicator);
  write_lines(file("graph_labels"), graph_labels);
  if (with_labels) write_lines(file("node_labels"), node_labels);
  if (dataset.has_attributes) write_lines(file("node_attributes"), attributes);
}

}  // namespace rwk

#include "ecnlab/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "ecnlab/error.hpp"

namespace ecnlab {

namespace {

[[noreturn]] void fail(const std::filesystem::path& path, std::size_t line_no,
                       const std::string& msg) {
  throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": " + msg);
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

// Shortest decimal form that round-trips a double.
std::string format_double(double v) {
  char buf[40];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> cols;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      cols.push_back(line.substr(start));
      break;
    }
    cols.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return cols;
}

}  // namespace

TagSet load_tagset(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  TagSet ts;
  int background = -1;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.rfind("#background=", 0) == 0) {
      try {
        background = std::stoi(line.substr(12));
      } catch (const std::exception&) {
        fail(path, line_no, "bad #background directive: " + line);
      }
      continue;
    }
    if (line[0] == '#') continue;
    ts.labels.push_back(line);
  }
  if (background < 0) {
    background = ts.index_of("O");
    if (background < 0) background = ts.index_of("background");
  }
  if (background < 0 || background >= ts.size()) {
    throw ConfigError(path.string() + ": no background label (need O/background or #background=)");
  }
  ts.background_index = background;
  return ts;
}

void save_tagset(const TagSet& ts, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  out << "#background=" << ts.background_index << "\n";
  for (const std::string& label : ts.labels) out << label << "\n";
}

Dataset load_conll(const std::filesystem::path& path, const TagSet& tagset, DatasetRole role) {
  std::ifstream in = open_in(path);
  Dataset ds{tagset, DataKind::sequence, role, {}, {}};
  SequenceSample current;
  std::string line;
  std::size_t line_no = 0;

  auto flush = [&] {
    if (!current.tokens.empty()) {
      ds.sequences.push_back(std::move(current));
      current = SequenceSample{};
    }
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      continue;
    }
    const std::vector<std::string> cols = split_tabs(line);
    if (cols.size() < 2 || cols[0].empty()) {
      fail(path, line_no, "expected token<TAB>label");
    }
    const int label = tagset.index_of(cols[1]);
    if (label < 0) fail(path, line_no, "unknown label '" + cols[1] + "'");
    FeatureMap features;
    for (std::size_t c = 2; c < cols.size(); ++c) {
      const std::size_t eq = cols[c].find('=');
      if (eq == std::string::npos || eq == 0) {
        fail(path, line_no, "bad feature column '" + cols[c] + "' (expected name=value)");
      }
      features[cols[c].substr(0, eq)] = cols[c].substr(eq + 1);
    }
    current.tokens.push_back(cols[0]);
    current.features.push_back(std::move(features));
    current.labels.push_back(label);
  }
  flush();
  return ds;
}

void save_conll(const Dataset& ds, const std::filesystem::path& path) {
  if (ds.is_grid()) throw ConfigError("save_conll: grid dataset");
  std::ofstream out = open_out(path);
  for (const SequenceSample& s : ds.sequences) {
    for (int j = 0; j < s.length(); ++j) {
      if (s.tokens[j].find_first_of("\t\n") != std::string::npos) {
        throw ConfigError("save_conll: token contains tab or newline");
      }
      out << s.tokens[j] << '\t' << ds.tagset.labels[s.labels[j]];
      for (const auto& [name, value] : s.features[j]) {
        out << '\t' << name << '=' << value;
      }
      out << '\n';
    }
    out << '\n';
  }
}

Dataset load_grid(const std::filesystem::path& path, const TagSet& tagset, DatasetRole role) {
  std::ifstream in = open_in(path);
  Dataset ds{tagset, DataKind::grid, role, {}, {}};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream header(line);
    std::string magic, version;
    int h = 0, w = 0, c = 0, k = 0;
    header >> magic >> version >> h >> w >> c >> k;
    if (!header || magic != "ECNGRID" || version != "v1") {
      fail(path, line_no, "bad grid header: " + line);
    }
    if (c != 3) fail(path, line_no, "unsupported channel count " + std::to_string(c));
    if (k != tagset.size()) {
      fail(path, line_no, "tagset size mismatch: file says " + std::to_string(k) +
                              ", tagset has " + std::to_string(tagset.size()));
    }
    if (h <= 0 || w <= 0) fail(path, line_no, "non-positive grid shape");
    GridSample g;
    g.height = h;
    g.width = w;
    g.pixels.reserve(static_cast<std::size_t>(h) * w);
    g.labels.reserve(static_cast<std::size_t>(h) * w);
    for (int p = 0; p < h * w; ++p) {
      if (!std::getline(in, line)) fail(path, line_no, "truncated grid sample");
      ++line_no;
      std::istringstream row(line);
      double r = 0, gg = 0, b = 0;
      int label = 0;
      row >> r >> gg >> b >> label;
      if (!row) fail(path, line_no, "expected `r g b label`: " + line);
      for (double ch : {r, gg, b}) {
        if (!(ch >= 0.0 && ch <= 1.0)) fail(path, line_no, "channel outside [0,1]");
      }
      if (label < 0 || label >= k) {
        fail(path, line_no, "unknown label '" + std::to_string(label) + "'");
      }
      g.pixels.push_back({r, gg, b});
      g.labels.push_back(label);
    }
    ds.grids.push_back(std::move(g));
  }
  return ds;
}

void save_grid(const Dataset& ds, const std::filesystem::path& path) {
  if (!ds.is_grid()) throw ConfigError("save_grid: sequence dataset");
  std::ofstream out = open_out(path);
  for (const GridSample& g : ds.grids) {
    out << "ECNGRID v1 " << g.height << ' ' << g.width << " 3 " << ds.tagset.size() << "\n";
    for (int p = 0; p < g.size(); ++p) {
      out << format_double(g.pixels[p][0]) << ' ' << format_double(g.pixels[p][1]) << ' '
          << format_double(g.pixels[p][2]) << ' ' << g.labels[p] << "\n";
    }
  }
}

Dataset load_dataset(const std::filesystem::path& path, const TagSet& tagset, DataKind kind,
                     DatasetRole role) {
  return kind == DataKind::grid ? load_grid(path, tagset, role)
                                : load_conll(path, tagset, role);
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  if (ds.is_grid()) {
    save_grid(ds, path);
  } else {
    save_conll(ds, path);
  }
}

}  // namespace ecnlab

#include "qcomp/net_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "qcomp/table_io.hpp"

namespace qcomp {

namespace {

void put_number(std::string& out, double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.9g", v);
  out.append(buf, static_cast<std::size_t>(n));
}

template <typename It>
void put_row(std::string& out, It begin, It end) {
  bool first = true;
  for (It it = begin; it != end; ++it) {
    if (!first) out.push_back(',');
    put_number(out, static_cast<double>(*it));
    first = false;
  }
  out.push_back('\n');
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Splits text into lines, remembering 1-based line numbers.
struct Lines {
  std::vector<std::pair<std::size_t, std::string_view>> data;
  std::size_t pos = 0;

  explicit Lines(std::string_view text, bool skip_comments) {
    std::size_t n = 0;
    while (!text.empty()) {
      const std::size_t eol = text.find('\n');
      std::string_view line = eol == std::string_view::npos ? text : text.substr(0, eol);
      text.remove_prefix(eol == std::string_view::npos ? text.size() : eol + 1);
      ++n;
      line = trim(line);
      if (line.empty()) continue;
      if (skip_comments && line.starts_with("//")) continue;
      data.emplace_back(n, line);
    }
  }

  std::pair<std::size_t, std::string_view> next(const char* what) {
    if (pos >= data.size()) {
      const std::size_t last = data.empty() ? 0 : data.back().first;
      throw NetFormatError(last, std::string("unexpected end of file, expected ") + what);
    }
    return data[pos++];
  }
};

std::vector<double> parse_row(std::size_t line, std::string_view s) {
  std::vector<double> out;
  while (true) {
    const std::size_t comma = s.find(',');
    std::string_view tok = trim(comma == std::string_view::npos ? s : s.substr(0, comma));
    if (tok.empty() && comma == std::string_view::npos && !out.empty()) break;  // trailing comma
    double v = 0.0;
    const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size() || tok.empty()) {
      throw NetFormatError(line, "non-numeric token '" + std::string(tok) + "'");
    }
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

std::vector<double> expect_row(Lines& lines, std::size_t count, const char* what) {
  const auto [line, text] = lines.next(what);
  std::vector<double> row = parse_row(line, text);
  if (row.size() != count) {
    throw NetFormatError(line, std::string(what) + ": expected " + std::to_string(count) + " values, found " +
                                   std::to_string(row.size()));
  }
  return row;
}

double f32(double v) { return static_cast<double>(static_cast<float>(v)); }

}  // namespace

std::string encode_net(const Mlp& net, const std::vector<std::string>& comments) {
  std::string out;
  for (const std::string& c : comments) out += "//" + c + "\n";
  out += std::to_string(net.num_layers()) + "\n";
  const auto& sizes = net.layer_sizes();
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (i > 0) out.push_back(',');
    out += std::to_string(sizes[i]);
  }
  out.push_back('\n');
  put_row(out, net.input_mean.begin(), net.input_mean.end());
  put_row(out, net.input_range.begin(), net.input_range.end());
  const double outputs[2] = {net.output_mean, net.output_range};
  put_row(out, outputs, outputs + 2);
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const auto w = net.weight(l);
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      const float* row = w.data() + r * w.cols();
      put_row(out, row, row + w.cols());
    }
    const auto b = net.bias(l);
    put_row(out, b.data(), b.data() + b.size());
  }
  return out;
}

Mlp decode_net(std::string_view text) {
  Lines lines(text, true);
  const auto [l_count, t_count] = lines.next("layer count");
  const std::vector<double> count = parse_row(l_count, t_count);
  if (count.size() != 1 || count[0] < 1 || count[0] != static_cast<double>(static_cast<int>(count[0]))) {
    throw NetFormatError(l_count, "layer count must be one positive integer");
  }
  const auto n_layers = static_cast<std::size_t>(count[0]);
  const auto [l_sizes, t_sizes] = lines.next("layer sizes");
  const std::vector<double> raw_sizes = parse_row(l_sizes, t_sizes);
  if (raw_sizes.size() != n_layers + 1) {
    throw NetFormatError(l_sizes, "size line lists " + std::to_string(raw_sizes.size()) + " sizes for " +
                                      std::to_string(n_layers) + " layers");
  }
  std::vector<int> sizes;
  for (double v : raw_sizes) {
    if (v < 1 || v != static_cast<double>(static_cast<int>(v))) throw NetFormatError(l_sizes, "layer sizes must be positive integers");
    sizes.push_back(static_cast<int>(v));
  }
  Mlp net(sizes);
  const auto n_in = static_cast<std::size_t>(sizes.front());
  net.input_mean = expect_row(lines, n_in, "input means");
  net.input_range = expect_row(lines, n_in, "input ranges");
  const std::vector<double> outputs = expect_row(lines, 2, "output mean and range");
  for (double& v : net.input_mean) v = f32(v);
  for (double& v : net.input_range) {
    v = f32(v);
    if (!(v > 0.0)) throw NetFormatError(l_sizes, "input ranges must be positive");
  }
  net.output_mean = f32(outputs[0]);
  net.output_range = f32(outputs[1]);
  if (!(net.output_range > 0.0)) throw NetFormatError(l_sizes, "output range must be positive");

  for (std::size_t l = 0; l < n_layers; ++l) {
    auto w = net.weight(l);
    const std::string what = "layer " + std::to_string(l);
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      const std::vector<double> row = expect_row(lines, static_cast<std::size_t>(w.cols()), (what + " weights").c_str());
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = static_cast<float>(row[static_cast<std::size_t>(c)]);
    }
    auto b = net.bias(l);
    const std::vector<double> row = expect_row(lines, static_cast<std::size_t>(b.size()), (what + " biases").c_str());
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = static_cast<float>(row[static_cast<std::size_t>(i)]);
  }
  if (lines.pos != lines.data.size()) {
    throw NetFormatError(lines.data[lines.pos].first, "weight count mismatch: extra lines after the last layer");
  }
  return net;
}

std::vector<std::string> net_comments(std::string_view text) {
  std::vector<std::string> out;
  Lines lines(text, false);
  for (const auto& [n, line] : lines.data) {
    if (!line.starts_with("//")) break;
    out.emplace_back(line.substr(2));
  }
  return out;
}

namespace {

std::string read_text(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = read_file_bytes(path);
  return std::string(bytes.begin(), bytes.end());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string manifest_text(const NetworkArray& array, const std::vector<std::string>& comments) {
  std::string out;
  for (const std::string& c : comments) out += "//" + c + "\n";
  out += "//tau_cuts=";
  for (std::size_t i = 0; i < array.tau_cuts().size(); ++i) {
    if (i > 0) out.push_back(' ');
    put_number(out, array.tau_cuts()[i]);
  }
  out += "\n//coc_penalty_stripped=" + std::string(array.coc_penalty_stripped() ? "1" : "0") + "\n";
  for (std::size_t t = 0; t < array.tau_cuts().size(); ++t) {
    for (Advisory a : kAllAdvisories) {
      out += std::to_string(t) + "," + std::string(to_string(a)) + "," + member_filename(t, a) + "\n";
    }
  }
  return out;
}

}  // namespace

void save_net(const Mlp& net, const std::filesystem::path& path, const std::vector<std::string>& comments) {
  write_text(path, encode_net(net, comments));
}

Mlp load_net(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  try {
    return decode_net(text);
  } catch (const NetFormatError& e) {
    throw NetFormatError(e.line(), path.string() + ": " + e.what());
  }
}

std::string member_filename(std::size_t tau_index, Advisory a_prev) {
  return "net_tau" + std::to_string(tau_index) + "_" + std::string(to_string(a_prev)) + ".nnet";
}

std::size_t save_array(const NetworkArray& array, const std::filesystem::path& dir, const std::vector<std::string>& comments) {
  std::filesystem::create_directories(dir);
  std::size_t total = 0;
  for (std::size_t t = 0; t < array.tau_cuts().size(); ++t) {
    for (Advisory a : kAllAdvisories) {
      const std::string text = encode_net(array.member(t, a), comments);
      write_text(dir / member_filename(t, a), text);
      total += text.size();
    }
  }
  const std::string manifest = manifest_text(array, comments);
  write_text(dir / kManifestName, manifest);
  return total + manifest.size();
}

std::size_t array_serialized_bytes(const NetworkArray& array, const std::vector<std::string>& comments) {
  std::size_t total = manifest_text(array, comments).size();
  for (const Mlp& m : array.members()) total += encode_net(m, comments).size();
  return total;
}

NetworkArray load_array(const std::filesystem::path& dir) {
  const std::filesystem::path manifest_path = dir / kManifestName;
  const std::string text = read_text(manifest_path);
  std::vector<double> tau_cuts;
  bool stripped = false;
  bool have_tau = false;
  struct Entry {
    std::size_t tau;
    Advisory a;
    std::string file;
  };
  std::vector<Entry> entries;
  Lines lines(text, false);
  for (const auto& [n, line] : lines.data) {
    if (line.starts_with("//")) {
      const std::string_view body = trim(line.substr(2));
      if (body.starts_with("tau_cuts=")) {
        std::istringstream is(std::string(body.substr(9)));
        double v = 0.0;
        while (is >> v) tau_cuts.push_back(f32(v));
        have_tau = true;
      } else if (body.starts_with("coc_penalty_stripped=")) {
        stripped = body.substr(21) == "1";
      }
      continue;
    }
    const std::size_t c1 = line.find(',');
    const std::size_t c2 = c1 == std::string_view::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string_view::npos) throw NetFormatError(n, manifest_path.string() + ": expected tau_index,a_prev,filename");
    std::size_t tau = 0;
    const std::string_view t = trim(line.substr(0, c1));
    const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), tau);
    if (ec != std::errc() || p != t.data() + t.size()) throw NetFormatError(n, manifest_path.string() + ": bad tau index");
    const auto a = parse_advisory(trim(line.substr(c1 + 1, c2 - c1 - 1)));
    if (!a) throw NetFormatError(n, manifest_path.string() + ": bad advisory");
    entries.push_back({tau, *a, std::string(trim(line.substr(c2 + 1)))});
  }
  if (!have_tau) throw NetFormatError(0, manifest_path.string() + ": missing tau_cuts comment");
  std::vector<Mlp> members(tau_cuts.size() * kNumAdvisories);
  std::vector<bool> seen(members.size(), false);
  for (const Entry& e : entries) {
    if (e.tau >= tau_cuts.size()) throw Error(manifest_path.string() + ": tau index " + std::to_string(e.tau) + " out of range");
    const std::size_t m = NetworkArray::member_index(e.tau, e.a);
    if (seen[m]) throw Error(manifest_path.string() + ": duplicate member " + e.file);
    members[m] = load_net(dir / e.file);
    seen[m] = true;
  }
  for (std::size_t m = 0; m < seen.size(); ++m) {
    if (!seen[m]) throw Error(manifest_path.string() + ": missing member " + std::to_string(m));
  }
  return NetworkArray(std::move(tau_cuts), std::move(members), stripped);
}

}  // namespace qcomp

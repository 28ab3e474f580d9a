#include "chs/structure_io.hpp"

#include "chs/error.hpp"

#include <json.hpp>

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace chs {

using json = nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

Eigen::Index ix(std::size_t v) { return static_cast<Eigen::Index>(v); }

void append_entry(std::string& out, cplx z) {
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
    throw Error("cannot serialize a non-finite entry");
  }
  out += '[';
  out += format_double(z.real());
  out += ", ";
  out += format_double(z.imag());
  out += ']';
}

void append_rows(std::string& out, const Matrix& m) {
  out += "[\n";
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    out += "    [";
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c > 0) {
        out += ", ";
      }
      append_entry(out, m(r, c));
    }
    out += r + 1 < m.rows() ? "],\n" : "]\n";
  }
  out += "  ]";
}

// SAX handler building a DOM and remembering where every node starts. The
// events arrive in token order, so a small token skipper keeps `pos_` in
// step with the lexer.
class PositionedDom {
 public:
  explicit PositionedDom(std::string_view text) : text_(text) {}

  bool null() { return leaf(json(nullptr), 4); }
  bool boolean(bool v) { return leaf(json(v), v ? 4 : 5); }
  bool number_integer(json::number_integer_t v) { return leaf(json(v), 0); }
  bool number_unsigned(json::number_unsigned_t v) { return leaf(json(v), 0); }
  bool number_float(json::number_float_t v, const std::string&) { return leaf(json(v), 0); }
  bool string(std::string& v) {
    const std::size_t at = locate();
    skip_string();
    return put(json(v), at);
  }
  bool binary(json::binary_t&) { return false; }
  bool key(std::string& k) {
    locate();
    skip_string();
    frames_.back().key = k;
    return true;
  }
  bool start_object(std::size_t) { return open(json::object()); }
  bool start_array(std::size_t) { return open(json::array()); }
  bool end_object() { return close(); }
  bool end_array() { return close(); }

  bool parse_error(std::size_t position, const std::string&, const nlohmann::detail::exception& ex) {
    std::string msg = ex.what();
    // drop the "[json.exception.parse_error.101] parse error at line 1, column 2: " prefix
    if (const auto colon = msg.find(": "); colon != std::string::npos && msg.rfind("[json.", 0) == 0) {
      msg = msg.substr(colon + 2);
    }
    const auto [line, col] = line_column(position > 0 ? position - 1 : 0);
    throw ParseError(msg, line, col);
  }

  json root;

  std::pair<std::size_t, std::size_t> where(const std::string& path) const {
    const auto it = positions_.find(path);
    return line_column(it == positions_.end() ? 0 : it->second);
  }

  std::pair<std::size_t, std::size_t> line_column(std::size_t offset) const {
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t k = 0; k < offset && k < text_.size(); ++k) {
      if (text_[k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    return {line, col};
  }

 private:
  struct Frame {
    json* node;
    std::string path;
    std::size_t next_index = 0;
    std::string key;
  };

  std::size_t locate() {
    while (pos_ < text_.size() &&
           (std::isspace(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == ',' || text_[pos_] == ':')) {
      ++pos_;
    }
    return pos_;
  }

  void skip_string() {
    ++pos_;
    while (pos_ < text_.size() && text_[pos_] != '"') {
      pos_ += text_[pos_] == '\\' ? 2 : 1;
    }
    ++pos_;
  }

  void skip_number() {
    while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '-' ||
                                   text_[pos_] == '+' || text_[pos_] == '.' || text_[pos_] == 'e' ||
                                   text_[pos_] == 'E')) {
      ++pos_;
    }
  }

  std::string child_path() {
    if (frames_.empty()) {
      return "";
    }
    Frame& f = frames_.back();
    if (f.node->is_array()) {
      return f.path + "/" + std::to_string(f.next_index++);
    }
    return f.path + "/" + f.key;
  }

  json* put(json v, std::size_t at) {
    const std::string path = child_path();
    positions_[path] = at;
    if (frames_.empty()) {
      root = std::move(v);
      return &root;
    }
    json& parent = *frames_.back().node;
    if (parent.is_array()) {
      parent.push_back(std::move(v));
      return &parent.back();
    }
    json& slot = parent[frames_.back().key];
    slot = std::move(v);
    return &slot;
  }

  bool leaf(json v, std::size_t literal_len) {
    const std::size_t at = locate();
    if (literal_len > 0) {
      pos_ += literal_len;
    } else {
      skip_number();
    }
    put(std::move(v), at);
    return true;
  }

  bool open(json v) {
    const std::size_t at = locate();
    ++pos_;
    const std::string path = frames_.empty() ? "" : (frames_.back().node->is_array()
                                                          ? frames_.back().path + "/" +
                                                                std::to_string(frames_.back().next_index)
                                                          : frames_.back().path + "/" + frames_.back().key);
    json* node = put(std::move(v), at);
    frames_.push_back({node, path, 0, {}});
    return true;
  }

  bool close() {
    locate();
    ++pos_;
    frames_.pop_back();
    return true;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::vector<Frame> frames_;
  std::unordered_map<std::string, std::size_t> positions_;
};

class Document {
 public:
  explicit Document(std::string_view text) : dom_(text) {
    json::sax_parse(text.begin(), text.end(), &dom_);
    if (!dom_.root.is_object()) {
      fail("", "document must be an object");
    }
  }

  [[noreturn]] void fail(const std::string& path, const std::string& what) const {
    const auto [line, col] = dom_.where(path);
    throw ParseError(what, line, col);
  }

  const json& member(const std::string& name) const {
    const auto it = dom_.root.find(name);
    if (it == dom_.root.end()) {
      fail("", "missing member \"" + name + "\"");
    }
    return *it;
  }

  bool has(const std::string& name) const { return dom_.root.contains(name); }

  std::size_t positive_integer(const std::string& name) const {
    const json& v = member(name);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 1) {
      fail("/" + name, "\"" + name + "\" must be a positive integer");
    }
    return v.get<std::size_t>();
  }

  // rows x cols array of [re, im] at /name
  Matrix complex_table(const std::string& name, std::size_t rows, std::size_t cols) const {
    const json& t = member(name);
    const std::string base = "/" + name;
    if (!t.is_array()) {
      fail(base, "\"" + name + "\" must be an array of rows");
    }
    if (t.size() != rows) {
      fail(base, "\"" + name + "\" has " + std::to_string(t.size()) + " rows, expected " + std::to_string(rows));
    }
    Matrix m(ix(rows), ix(cols));
    for (std::size_t r = 0; r < rows; ++r) {
      const json& row = t[r];
      const std::string rp = base + "/" + std::to_string(r);
      if (!row.is_array()) {
        fail(rp, name + " row " + std::to_string(r) + " must be an array");
      }
      if (row.size() != cols) {
        fail(rp, name + " row " + std::to_string(r) + " has " + std::to_string(row.size()) + " entries, expected " +
                     std::to_string(cols));
      }
      for (std::size_t c = 0; c < cols; ++c) {
        const json& e = row[c];
        const std::string ep = rp + "/" + std::to_string(c);
        if (!e.is_array() || e.size() != 2) {
          fail(ep, name + "[" + std::to_string(r) + "][" + std::to_string(c) + "] must be a pair [re, im]");
        }
        double parts[2];
        for (std::size_t k = 0; k < 2; ++k) {
          const std::string np = ep + "/" + std::to_string(k);
          if (!e[k].is_number()) {
            fail(np, name + "[" + std::to_string(r) + "][" + std::to_string(c) + "] is non-numeric");
          }
          parts[k] = e[k].get<double>();
          if (!std::isfinite(parts[k])) {
            fail(np, name + "[" + std::to_string(r) + "][" + std::to_string(c) + "] is not finite");
          }
        }
        m(ix(r), ix(c)) = cplx(parts[0], parts[1]);
      }
    }
    return m;
  }

  const json& root() const { return dom_.root; }

 private:
  PositionedDom dom_;
};

}  // namespace

std::string serialize(const CyclicStructure& s) {
  std::string out = "{\n";
  out += "  \"format_version\": " + std::to_string(kFormatVersion) + ",\n";
  out += "  \"dim\": " + std::to_string(s.dim()) + ",\n";
  out += "  \"labels\": " + json(s.labels()).dump() + ",\n";
  out += "  \"pair_index\": \"row-major, p(i,j) = i*n + j\",\n";
  out += "  \"gram\": ";
  append_rows(out, s.gram());
  out += "\n}\n";
  return out;
}

LoadedStructure parse_structure(std::string_view text, double tol) {
  const Document doc(text);
  const json& version = doc.member("format_version");
  if (!version.is_number_integer() || version.get<std::int64_t>() != kFormatVersion) {
    doc.fail("/format_version", "unsupported format_version (expected " + std::to_string(kFormatVersion) + ")");
  }
  const std::size_t n = doc.positive_integer("dim");
  std::vector<std::string> labels;
  if (doc.has("labels")) {
    const json& l = doc.root().at("labels");
    if (!l.is_array() || l.size() != n) {
      doc.fail("/labels", "\"labels\" must be an array of " + std::to_string(n) + " strings");
    }
    for (std::size_t k = 0; k < n; ++k) {
      if (!l[k].is_string()) {
        doc.fail("/labels/" + std::to_string(k), "label " + std::to_string(k) + " must be a string");
      }
      labels.push_back(l[k].get<std::string>());
    }
  }
  Matrix gram = doc.complex_table("gram", n * n, n * n);
  LoadedStructure out{CyclicStructure(n, std::move(gram), std::move(labels)), {}, {}};
  out.validation = validate(out.structure, tol);
  for (const AxiomRecord& r : out.validation.records) {
    if (!r.pass) {
      out.warnings.push_back(std::string(axiom_name(r.axiom)) + " fails: worst " + format_double(r.worst) +
                             " > " + format_double(r.threshold));
    }
  }
  return out;
}

std::string serialize_coefficients(const TensorElement& u) {
  std::string out = "{\n";
  out += "  \"dim\": " + std::to_string(u.dim()) + ",\n";
  out += "  \"coeffs\": ";
  append_rows(out, u.coeffs());
  out += "\n}\n";
  return out;
}

TensorElement parse_coefficients(std::string_view text) {
  const Document doc(text);
  const std::size_t n = doc.positive_integer("dim");
  return TensorElement(doc.complex_table("coeffs", n, n));
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot open " + path);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error("cannot write " + path);
  }
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) {
    throw Error("write failed for " + path);
  }
}

}  // namespace chs

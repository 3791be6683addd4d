#include "km3d/kitti_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "km3d/error.hpp"

namespace km3d::kitti {

namespace {

struct Token {
  std::string_view text;
  int column;  // 1-based
};

std::vector<Token> split_ws(std::string_view line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    if (i >= line.size()) break;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    out.push_back({line.substr(start, i - start), static_cast<int>(start) + 1});
  }
  return out;
}

double to_double(const Token& tok, int line) {
  double v = 0.0;
  const char* first = tok.text.data();
  const char* last = first + tok.text.size();
  if (!tok.text.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw ParseError(ErrorCode::MalformedNumber, line, tok.column, "'" + std::string(tok.text) + "' is not a number");
  }
  return v;
}

int to_int(const Token& tok, int line) {
  int v = 0;
  const char* first = tok.text.data();
  const char* last = first + tok.text.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw ParseError(ErrorCode::MalformedNumber, line, tok.column, "'" + std::string(tok.text) + "' is not an integer");
  }
  return v;
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = text.find('\n', pos);
    const std::string_view line = text.substr(pos, end == std::string_view::npos ? text.size() - pos : end - pos);
    ++line_no;
    fn(line, line_no);
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
}

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::Io, "cannot open " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void append_object(std::string& out, const KittiObject& o, bool with_score) {
  char buf[512];
  int n = std::snprintf(buf, sizeof(buf), "%s %.2f %d %.2f %.2f %.2f %.2f %.2f %.2f %.2f %.2f %.2f %.2f %.2f %.2f",
                        o.type.c_str(), o.truncated, o.occluded, o.alpha, o.bbox.u_min, o.bbox.v_min, o.bbox.u_max,
                        o.bbox.v_max, o.h, o.w, o.l, o.location.x(), o.location.y(), o.location.z(), o.rotation_y);
  out.append(buf, static_cast<std::size_t>(n));
  if (with_score) {
    n = std::snprintf(buf, sizeof(buf), " %.2f", o.score.value_or(1.0));
    out.append(buf, static_cast<std::size_t>(n));
  }
  out.push_back('\n');
}

}  // namespace

const char* to_string(Difficulty d) {
  switch (d) {
    case Difficulty::Easy: return "easy";
    case Difficulty::Moderate: return "moderate";
    case Difficulty::Hard: return "hard";
    case Difficulty::Ignored: return "ignored";
  }
  return "unknown";
}

Mat34 CalibFile::matrix(const std::string& key) const {
  const auto it = entries.find(key);
  if (it == entries.end()) throw Error(ErrorCode::MissingKey, "calibration has no key '" + key + "'");
  if (it->second.size() != 12) throw Error(ErrorCode::FieldCount, "'" + key + "' does not hold 12 values");
  Mat34 M;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) M(r, c) = it->second[static_cast<std::size_t>(4 * r + c)];
  return M;
}

CalibFile parse_calib(std::string_view text) {
  CalibFile calib;
  int p2_line = 0;
  for_each_line(text, [&](std::string_view line, int line_no) {
    const auto tokens = split_ws(line);
    if (tokens.empty()) return;
    std::string_view key = tokens[0].text;
    if (key.empty() || key.back() != ':') {
      throw ParseError(ErrorCode::BadFormat, line_no, tokens[0].column, "expected 'key:' at line start");
    }
    key.remove_suffix(1);
    std::vector<double> values;
    for (std::size_t k = 1; k < tokens.size(); ++k) values.push_back(to_double(tokens[k], line_no));
    if (key == "P2") {
      if (values.size() != 12) {
        throw ParseError(ErrorCode::FieldCount, line_no, tokens[0].column,
                         "P2 needs 12 values, found " + std::to_string(values.size()));
      }
      p2_line = line_no;
    }
    calib.entries[std::string(key)] = std::move(values);
  });
  if (p2_line == 0) throw ParseError(ErrorCode::MissingKey, 0, 0, "no 'P2:' line in calibration");
  calib.p2 = CameraModel::from_projection(calib.matrix("P2"));
  return calib;
}

CalibFile load_calib(const std::string& path) { return parse_calib(read_file(path)); }

std::vector<KittiObject> parse_labels(std::string_view text) {
  std::vector<KittiObject> out;
  for_each_line(text, [&](std::string_view line, int line_no) {
    const auto t = split_ws(line);
    if (t.empty()) return;
    if (t.size() != 15 && t.size() != 16) {
      throw ParseError(ErrorCode::FieldCount, line_no, 1,
                       "expected 15 or 16 fields, found " + std::to_string(t.size()));
    }
    KittiObject o;
    o.type = std::string(t[0].text);
    o.truncated = to_double(t[1], line_no);
    o.occluded = to_int(t[2], line_no);
    o.alpha = to_double(t[3], line_no);
    o.bbox = {to_double(t[4], line_no), to_double(t[5], line_no), to_double(t[6], line_no), to_double(t[7], line_no)};
    o.h = to_double(t[8], line_no);
    o.w = to_double(t[9], line_no);
    o.l = to_double(t[10], line_no);
    o.location = Vec3(to_double(t[11], line_no), to_double(t[12], line_no), to_double(t[13], line_no));
    o.rotation_y = to_double(t[14], line_no);
    if (t.size() == 16) o.score = to_double(t[15], line_no);
    out.push_back(std::move(o));
  });
  return out;
}

std::vector<KittiObject> load_labels(const std::string& path) { return parse_labels(read_file(path)); }

std::string write_results(const std::vector<KittiObject>& objects) {
  std::string out;
  for (const auto& o : objects) append_object(out, o, true);
  return out;
}

std::string write_labels(const std::vector<KittiObject>& objects) {
  std::string out;
  for (const auto& o : objects) append_object(out, o, false);
  return out;
}

namespace {
// Official devkit thresholds, indexed by Easy/Moderate/Hard.
constexpr double kMinHeight[3] = {40.0, 25.0, 25.0};
constexpr int kMaxOcclusion[3] = {0, 1, 2};
constexpr double kMaxTruncation[3] = {0.15, 0.30, 0.50};
}  // namespace

double min_height(Difficulty level) {
  return level == Difficulty::Ignored ? 0.0 : kMinHeight[static_cast<int>(level)];
}

bool meets(const KittiObject& obj, Difficulty level) {
  if (level == Difficulty::Ignored) return true;
  const int k = static_cast<int>(level);
  return obj.bbox.height() >= kMinHeight[k] && obj.occluded <= kMaxOcclusion[k] && obj.truncated <= kMaxTruncation[k];
}

Difficulty difficulty(const KittiObject& obj) {
  for (auto level : {Difficulty::Easy, Difficulty::Moderate, Difficulty::Hard}) {
    if (meets(obj, level)) return level;
  }
  return Difficulty::Ignored;
}

ObjectBox3D gt_to_box(const KittiObject& obj) {
  ObjectBox3D box;
  box.dim = {obj.h, obj.w, obj.l};
  box.theta = obj.rotation_y;
  box.alpha = obj.alpha;
  box.T = obj.location + Vec3(0.0, -obj.h / 2.0, 0.0);
  return box;
}

KittiObject box_to_gt(const ObjectBox3D& box, const KittiObject& templ) {
  KittiObject o = templ;
  o.h = box.dim.h;
  o.w = box.dim.w;
  o.l = box.dim.l;
  o.rotation_y = box.theta;
  o.alpha = box.alpha;
  o.location = box.T + Vec3(0.0, box.dim.h / 2.0, 0.0);
  return o;
}

}  // namespace km3d::kitti

#include "matchbench/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <cstdio>
#include <map>

#include <Eigen/LU>
#include <Eigen/SVD>
#include "json.hpp"

#include "text_util.hpp"

namespace matchbench {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr std::string_view kManifestFormat = "matchbench-manifest";
constexpr int kManifestVersion = 1;
constexpr std::string_view kPairListHeader = "pair_id,ref,query";

// Slack on the association window so that 1.02 - 1.00 counts as 0.02.
constexpr double kTimeSlack = 1e-9;

bool is_comment_or_blank(std::string_view line) {
  const std::string_view t = detail::trim(line);
  return t.empty() || t.front() == '#';
}

std::string sequence_name(const std::string& dir) {
  fs::path p = fs::path(dir).lexically_normal();
  if (p.filename().empty()) p = p.parent_path();
  return p.filename().string();
}

void require_directory(const std::string& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw Error(ErrorKind::kIo, "not a directory: '" + dir + "'");
  if (fs::is_empty(dir, ec)) throw Error(ErrorKind::kEmptySequence, "directory is empty: '" + dir + "'");
}

void require_file(const fs::path& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) {
    throw Error(ErrorKind::kIo, "missing file '" + path.string() + "'");
  }
}

// Keeps matrices that are already rotations bit-for-bit; projects slightly
// non-orthonormal input (e.g. KITTI's 7-digit poses) onto SO(3).
Mat3 sanitize_rotation(const Mat3& R, const std::string& source, std::size_t line) {
  if (is_rotation(R)) return R;
  const double ortho = (R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (!R.allFinite() || ortho > 1e-3 || R.determinant() <= 0.0) {
    throw ParseError(source, line, "matrix is not a rotation");
  }
  Eigen::JacobiSVD<Mat3> svd(R, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 projected = svd.matrixU() * svd.matrixV().transpose();
  if (projected.determinant() < 0.0) {
    Mat3 U = svd.matrixU();
    U.col(2) *= -1.0;
    projected = U * svd.matrixV().transpose();
  }
  return projected;
}

std::vector<double> parse_numbers(std::string_view line, const std::string& source, std::size_t line_no) {
  std::vector<double> out;
  for (std::string_view tok : detail::split_ws(line)) {
    out.push_back(detail::parse_finite(tok, source, line_no));
  }
  return out;
}

template <typename T>
T required(const ordered_json& obj, const char* field, const std::string& source) {
  const auto it = obj.find(field);
  if (it == obj.end()) throw ParseError(source, 0, std::string("missing required field '") + field + "'");
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError(source, 0, std::string("field '") + field + "' has the wrong type");
  }
}

double required_finite(const ordered_json& obj, const char* field, const std::string& source) {
  const auto it = obj.find(field);
  if (it == obj.end()) throw ParseError(source, 0, std::string("missing required field '") + field + "'");
  if (!it->is_number()) throw ParseError(source, 0, std::string("field '") + field + "' is not a number");
  const double v = it->get<double>();
  if (!std::isfinite(v)) throw ParseError(source, 0, std::string("field '") + field + "' is not finite");
  return v;
}

}  // namespace

// ---- manifest ---------------------------------------------------------------

std::size_t SequenceManifest::pose_count() const {
  return static_cast<std::size_t>(
      std::count_if(images.begin(), images.end(), [](const ImageEntry& e) { return e.has_pose; }));
}

void SequenceManifest::validate() const {
  if (!(fps >= 0.0) || !std::isfinite(fps)) {
    throw Error(ErrorKind::kInvalidInput, "manifest fps must be finite and >= 0");
  }
  for (std::size_t i = 0; i < images.size(); ++i) {
    const ImageEntry& e = images[i];
    if (!std::isfinite(e.timestamp)) {
      throw Error(ErrorKind::kInvalidInput, "image " + std::to_string(i) + ": non-finite timestamp");
    }
    if (fps > 0.0 && i > 0 && e.timestamp < images[i - 1].timestamp) {
      throw Error(ErrorKind::kInvalidInput,
                  "image " + std::to_string(i) + ": timestamps decrease in an ordered sequence");
    }
    e.calibration.validate();
    if (e.has_pose && (!is_rotation(e.pose.rotation) || !e.pose.translation.allFinite())) {
      throw Error(ErrorKind::kInvalidInput, "image " + std::to_string(i) + ": invalid pose");
    }
  }
}

std::string format_manifest(const SequenceManifest& manifest) {
  ordered_json root;
  root["format"] = kManifestFormat;
  root["version"] = kManifestVersion;
  root["tool"] = tool_version_string();
  root["name"] = manifest.name;
  root["fps"] = manifest.fps;
  root["convention"] = kPoseConvention;
  ordered_json images = ordered_json::array();
  for (const ImageEntry& e : manifest.images) {
    const UnitQuaternion q = rotation_to_quat(e.pose.rotation);
    ordered_json j;
    j["path"] = e.path;
    j["timestamp"] = e.timestamp;
    j["fx"] = e.calibration.fx;
    j["fy"] = e.calibration.fy;
    j["cx"] = e.calibration.cx;
    j["cy"] = e.calibration.cy;
    j["skew"] = e.calibration.skew;
    j["qw"] = q.w;
    j["qx"] = q.x;
    j["qy"] = q.y;
    j["qz"] = q.z;
    j["tx"] = e.pose.translation.x();
    j["ty"] = e.pose.translation.y();
    j["tz"] = e.pose.translation.z();
    // The quaternion is for readers; the row-major matrix is authoritative.
    ordered_json rot = ordered_json::array();
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) rot.push_back(e.pose.rotation(r, c));
    }
    j["rotation"] = std::move(rot);
    j["has_pose"] = e.has_pose;
    images.push_back(std::move(j));
  }
  root["images"] = std::move(images);
  return root.dump(1) + "\n";
}

SequenceManifest parse_manifest(std::string_view text, const std::string& source) {
  ordered_json root;
  try {
    root = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(source, 0, std::string("malformed JSON: ") + e.what());
  }
  if (!root.is_object()) throw ParseError(source, 0, "manifest must be a JSON object");
  if (required<std::string>(root, "format", source) != kManifestFormat) {
    throw ParseError(source, 0, "not a matchbench manifest");
  }
  if (required<int>(root, "version", source) != kManifestVersion) {
    throw ParseError(source, 0, "unsupported manifest version");
  }
  if (required<std::string>(root, "convention", source) != kPoseConvention) {
    throw ParseError(source, 0, "unsupported pose convention");
  }

  SequenceManifest m;
  m.name = required<std::string>(root, "name", source);
  m.fps = required_finite(root, "fps", source);
  const auto it = root.find("images");
  if (it == root.end() || !it->is_array()) throw ParseError(source, 0, "missing required field 'images'");
  for (const ordered_json& j : *it) {
    if (!j.is_object()) throw ParseError(source, 0, "image entries must be objects");
    ImageEntry e;
    e.path = required<std::string>(j, "path", source);
    e.timestamp = required_finite(j, "timestamp", source);
    e.calibration.fx = required_finite(j, "fx", source);
    e.calibration.fy = required_finite(j, "fy", source);
    e.calibration.cx = required_finite(j, "cx", source);
    e.calibration.cy = required_finite(j, "cy", source);
    e.calibration.skew = required_finite(j, "skew", source);
    e.pose.translation = {required_finite(j, "tx", source), required_finite(j, "ty", source),
                          required_finite(j, "tz", source)};
    const UnitQuaternion q{required_finite(j, "qw", source), required_finite(j, "qx", source),
                           required_finite(j, "qy", source), required_finite(j, "qz", source)};
    e.has_pose = required<bool>(j, "has_pose", source);
    if (const auto rot = j.find("rotation"); rot != j.end()) {
      if (!rot->is_array() || rot->size() != 9) {
        throw ParseError(source, 0, "field 'rotation' must hold 9 numbers");
      }
      for (int k = 0; k < 9; ++k) {
        const ordered_json& v = (*rot)[static_cast<std::size_t>(k)];
        if (!v.is_number() || !std::isfinite(v.get<double>())) {
          throw ParseError(source, 0, "field 'rotation' holds a non-finite value");
        }
        e.pose.rotation(k / 3, k % 3) = v.get<double>();
      }
    } else {
      if (std::abs(q.norm() - 1.0) > 1e-6) {
        throw ParseError(source, 0, "quaternion is not unit length");
      }
      e.pose.rotation = quat_to_rotation(q);
    }
    m.images.push_back(std::move(e));
  }
  m.validate();
  return m;
}

void write_manifest(const SequenceManifest& manifest, const std::string& path) {
  write_text_file(path, format_manifest(manifest));
}

SequenceManifest read_manifest(const std::string& path) {
  return parse_manifest(read_text_file(path), path);
}

std::string resolve_image_path(const std::string& manifest_path, const std::string& image_path) {
  const fs::path p(image_path);
  if (p.is_absolute()) return image_path;
  return (fs::path(manifest_path).parent_path() / p).lexically_normal().string();
}

// ---- TUM --------------------------------------------------------------------

SequenceManifest import_tum(const std::string& dir, const TumImportOptions& options) {
  require_directory(dir);
  const fs::path root(dir);
  const fs::path list_path = root / options.image_list;
  const fs::path traj_path = root / options.trajectory;
  require_file(list_path);
  require_file(traj_path);

  struct Sample {
    double t;
    Pose pose;
  };
  std::vector<Sample> trajectory;
  {
    const std::string text = read_text_file(traj_path.string());
    std::size_t line_no = 0;
    for (std::string_view line : detail::split_lines(text)) {
      ++line_no;
      if (is_comment_or_blank(line)) continue;
      const std::vector<double> v = parse_numbers(line, traj_path.string(), line_no);
      if (v.size() != 8) {
        throw ParseError(traj_path.string(), line_no,
                         "expected 'timestamp tx ty tz qx qy qz qw', got " +
                             std::to_string(v.size()) + " values");
      }
      Sample s;
      s.t = v[0];
      s.pose.translation = {v[1], v[2], v[3]};
      try {
        s.pose.rotation = quat_to_rotation({v[7], v[4], v[5], v[6]});
      } catch (const Error&) {
        throw ParseError(traj_path.string(), line_no, "zero-norm quaternion");
      }
      trajectory.push_back(s);
    }
  }
  std::stable_sort(trajectory.begin(), trajectory.end(),
                   [](const Sample& a, const Sample& b) { return a.t < b.t; });

  Calibration calib{525.0, 525.0, 319.5, 239.5, 0.0};
  if (const fs::path calib_path = root / options.calibration; fs::is_regular_file(calib_path)) {
    const std::string text = read_text_file(calib_path.string());
    std::size_t line_no = 0;
    bool found = false;
    for (std::string_view line : detail::split_lines(text)) {
      ++line_no;
      if (is_comment_or_blank(line)) continue;
      const std::vector<double> v = parse_numbers(line, calib_path.string(), line_no);
      if (v.size() != 4 && v.size() != 5) {
        throw ParseError(calib_path.string(), line_no, "expected 'fx fy cx cy [skew]'");
      }
      calib = {v[0], v[1], v[2], v[3], v.size() == 5 ? v[4] : 0.0};
      found = true;
      break;
    }
    if (!found) throw ParseError(calib_path.string(), 0, "no calibration line");
    calib.validate();
  }

  SequenceManifest m;
  m.name = sequence_name(dir);
  m.fps = options.fps;
  const std::string text = read_text_file(list_path.string());
  std::size_t line_no = 0;
  for (std::string_view line : detail::split_lines(text)) {
    ++line_no;
    if (is_comment_or_blank(line)) continue;
    const std::vector<std::string_view> tok = detail::split_ws(line);
    if (tok.size() < 2) throw ParseError(list_path.string(), line_no, "expected 'timestamp path'");
    ImageEntry e;
    e.timestamp = detail::parse_finite(tok[0], list_path.string(), line_no);
    e.path = (root / std::string(tok[1])).string();
    e.calibration = calib;

    const auto it = std::lower_bound(trajectory.begin(), trajectory.end(), e.timestamp,
                                     [](const Sample& s, double t) { return s.t < t; });
    const Sample* nearest = nullptr;
    if (it != trajectory.end()) nearest = &*it;
    if (it != trajectory.begin()) {
      const Sample* before = &*std::prev(it);
      if (!nearest || e.timestamp - before->t <= nearest->t - e.timestamp) nearest = before;
    }
    if (nearest && std::abs(nearest->t - e.timestamp) <= options.max_time_difference + kTimeSlack) {
      e.pose = nearest->pose;
      e.has_pose = true;
    }
    m.images.push_back(std::move(e));
  }
  if (m.pose_count() == 0) {
    throw Error(ErrorKind::kEmptySequence,
                "no image in '" + dir + "' could be associated with the trajectory");
  }
  m.validate();
  return m;
}

void export_tum(const SequenceManifest& manifest, const std::string& dir) {
  fs::create_directories(dir);
  std::string list = "# timestamp filename\n";
  std::string traj = "# timestamp tx ty tz qx qy qz qw\n";
  for (const ImageEntry& e : manifest.images) {
    list += format_double(e.timestamp) + " " + e.path + "\n";
    if (!e.has_pose) continue;
    const UnitQuaternion q = rotation_to_quat(e.pose.rotation);
    const Vec3& t = e.pose.translation;
    traj += format_double(e.timestamp) + " " + format_double(t.x()) + " " + format_double(t.y()) +
            " " + format_double(t.z()) + " " + format_double(q.x) + " " + format_double(q.y) +
            " " + format_double(q.z) + " " + format_double(q.w) + "\n";
  }
  write_text_file((fs::path(dir) / "rgb.txt").string(), list);
  write_text_file((fs::path(dir) / "groundtruth.txt").string(), traj);
  if (!manifest.images.empty()) {
    const Calibration& c = manifest.images.front().calibration;
    write_text_file((fs::path(dir) / "calibration.txt").string(),
                    format_double(c.fx) + " " + format_double(c.fy) + " " + format_double(c.cx) +
                        " " + format_double(c.cy) + " " + format_double(c.skew) + "\n");
  }
}

// ---- KITTI ------------------------------------------------------------------

SequenceManifest import_kitti(const std::string& dir, const std::string& sequence_id,
                              const KittiImportOptions& options) {
  require_directory(dir);
  const fs::path root(dir);
  const fs::path poses_path = root / "poses" / (sequence_id + ".txt");
  const fs::path seq_dir = root / "sequences" / sequence_id;
  const fs::path calib_path = seq_dir / "calib.txt";
  const fs::path times_path = seq_dir / "times.txt";
  require_file(poses_path);
  require_file(calib_path);

  Calibration calib;
  {
    const std::string text = read_text_file(calib_path.string());
    std::size_t line_no = 0;
    bool found = false;
    for (std::string_view line : detail::split_lines(text)) {
      ++line_no;
      std::vector<std::string_view> tok = detail::split_ws(line);
      if (tok.empty() || tok[0] != options.camera + ":") continue;
      tok.erase(tok.begin());
      if (tok.size() != 12) {
        throw ParseError(calib_path.string(), line_no, "projection matrix needs 12 numbers");
      }
      Mat3 K;
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
          K(r, c) = detail::parse_finite(tok[static_cast<std::size_t>(r * 4 + c)],
                                         calib_path.string(), line_no);
        }
      }
      if (K(2, 2) == 0.0) throw ParseError(calib_path.string(), line_no, "degenerate projection");
      calib = Calibration::from_matrix(K);
      found = true;
      break;
    }
    if (!found) throw ParseError(calib_path.string(), 0, "no '" + options.camera + ":' entry");
    calib.validate();
  }

  std::vector<Pose> poses;
  {
    const std::string text = read_text_file(poses_path.string());
    std::size_t line_no = 0;
    for (std::string_view line : detail::split_lines(text)) {
      ++line_no;
      if (detail::trim(line).empty()) continue;
      const std::vector<double> v = parse_numbers(line, poses_path.string(), line_no);
      if (v.size() != 12) {
        throw ParseError(poses_path.string(), line_no,
                         "expected 12 numbers, got " + std::to_string(v.size()));
      }
      Mat3 R;
      R << v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10];
      Pose p;
      p.rotation = sanitize_rotation(R, poses_path.string(), line_no);
      p.translation = {v[3], v[7], v[11]};
      poses.push_back(p);
    }
  }

  std::vector<double> times;
  if (fs::is_regular_file(times_path)) {
    const std::string text = read_text_file(times_path.string());
    std::size_t line_no = 0;
    for (std::string_view line : detail::split_lines(text)) {
      ++line_no;
      if (detail::trim(line).empty()) continue;
      times.push_back(detail::parse_finite(detail::trim(line), times_path.string(), line_no));
    }
  }

  const std::size_t n = times.empty() ? poses.size() : times.size();
  SequenceManifest m;
  m.name = "kitti-" + sequence_id;
  m.fps = options.fps;
  for (std::size_t i = 0; i < n; ++i) {
    ImageEntry e;
    char name[32];
    std::snprintf(name, sizeof(name), "%06zu.png", i);
    e.path = (seq_dir / options.image_subdir / name).string();
    e.timestamp = times.empty() ? static_cast<double>(i) / options.fps : times[i];
    e.calibration = calib;
    if (i < poses.size()) {
      e.pose = poses[i];
      e.has_pose = true;
    }
    m.images.push_back(std::move(e));
  }
  if (m.pose_count() == 0) throw Error(ErrorKind::kEmptySequence, "KITTI sequence has no poses");
  m.validate();
  return m;
}

std::string format_kitti_poses(const SequenceManifest& manifest) {
  std::string out;
  for (const ImageEntry& e : manifest.images) {
    if (!e.has_pose) continue;
    const Mat3& R = e.pose.rotation;
    const Vec3& t = e.pose.translation;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) out += format_double(R(r, c)) + " ";
      out += format_double(t(r));
      out += r == 2 ? "\n" : " ";
    }
  }
  return out;
}

// ---- Strecha ----------------------------------------------------------------

std::string format_strecha_camera(const ImageEntry& image, int width, int height) {
  std::string out;
  const Mat3 K = image.calibration.matrix();
  auto row = [&out](double a, double b, double c) {
    out += format_double(a) + " " + format_double(b) + " " + format_double(c) + "\n";
  };
  for (int r = 0; r < 3; ++r) row(K(r, 0), K(r, 1), K(r, 2));
  row(0.0, 0.0, 0.0);
  const Mat3& R = image.pose.rotation;
  for (int r = 0; r < 3; ++r) row(R(r, 0), R(r, 1), R(r, 2));
  const Vec3& c = image.pose.translation;
  row(c.x(), c.y(), c.z());
  out += std::to_string(width) + " " + std::to_string(height) + "\n";
  return out;
}

SequenceManifest import_strecha(const std::string& dir) {
  require_directory(dir);
  std::vector<fs::path> cameras;
  for (const fs::directory_entry& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".camera") {
      cameras.push_back(entry.path());
    }
  }
  std::sort(cameras.begin(), cameras.end());
  if (cameras.empty()) throw Error(ErrorKind::kEmptySequence, "no .camera files in '" + dir + "'");

  SequenceManifest m;
  m.name = sequence_name(dir);
  m.fps = 0.0;
  for (std::size_t i = 0; i < cameras.size(); ++i) {
    const std::string source = cameras[i].string();
    std::vector<double> v;
    std::size_t line_no = 0;
    const std::string text = read_text_file(source);
    for (std::string_view line : detail::split_lines(text)) {
      ++line_no;
      for (double x : parse_numbers(line, source, line_no)) v.push_back(x);
    }
    if (v.size() != 23 && v.size() != 26) {
      throw ParseError(source, 0,
                       "malformed camera file: expected 23 or 26 numbers, got " +
                           std::to_string(v.size()));
    }
    const std::size_t r_at = v.size() == 26 ? 12 : 9;
    Mat3 K, R;
    for (int k = 0; k < 9; ++k) {
      K(k / 3, k % 3) = v[static_cast<std::size_t>(k)];
      R(k / 3, k % 3) = v[r_at + static_cast<std::size_t>(k)];
    }
    if (K(2, 2) == 0.0 || K(1, 0) != 0.0 || K(2, 0) != 0.0 || K(2, 1) != 0.0) {
      throw ParseError(source, 0, "malformed camera file: K is not upper triangular");
    }
    ImageEntry e;
    e.path = cameras[i].parent_path().string() + "/" + cameras[i].stem().string();
    e.timestamp = static_cast<double>(i);
    e.calibration = Calibration::from_matrix(K);
    try {
      e.calibration.validate();
    } catch (const Error& err) {
      throw ParseError(source, 0, std::string("malformed camera file: ") + err.what());
    }
    e.pose.rotation = sanitize_rotation(R, source, 0);
    e.pose.translation = {v[r_at + 9], v[r_at + 10], v[r_at + 11]};
    e.has_pose = true;
    m.images.push_back(std::move(e));
  }
  m.validate();
  return m;
}

// ---- pairs ------------------------------------------------------------------

void PairGenConfig::validate() const {
  if (mode == PairMode::kShortFragment && k < 2) {
    throw Error(ErrorKind::kInvalidInput, "short-fragment pairing needs k >= 2");
  }
  if (mode == PairMode::kWideWindow && window < 1) {
    throw Error(ErrorKind::kInvalidInput, "wide-window pairing needs window >= 1");
  }
}

std::vector<PairTask> short_baseline_index_pairs(std::size_t n, std::size_t k) {
  if (k < 2) throw Error(ErrorKind::kInvalidInput, "short-fragment pairing needs k >= 2");
  if (n < 2) throw Error(ErrorKind::kEmptySequence, "short-fragment pairing needs >= 2 images");
  std::vector<PairTask> out;
  std::int64_t id = 0;
  for (std::size_t start = 0; start < n; start += k) {
    const std::size_t end = std::min(start + k, n);
    for (std::size_t q = start + 1; q < end; ++q) {
      PairTask p;
      p.pair_id = id++;
      p.ref_index = start;
      p.query_index = q;
      out.push_back(p);
    }
  }
  return out;
}

std::vector<PairTask> wide_exhaustive_index_pairs(std::size_t n) {
  if (n < 2) throw Error(ErrorKind::kEmptySequence, "pairing needs >= 2 images");
  return wide_window_index_pairs(n, n - 1);
}

std::vector<PairTask> wide_window_index_pairs(std::size_t n, std::size_t window) {
  if (window < 1) throw Error(ErrorKind::kInvalidInput, "wide-window pairing needs window >= 1");
  if (n < 2) throw Error(ErrorKind::kEmptySequence, "pairing needs >= 2 images");
  std::vector<PairTask> out;
  std::int64_t id = 0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const std::size_t last = std::min(i + window, n - 1);
    for (std::size_t j = i + 1; j <= last; ++j) {
      PairTask p;
      p.pair_id = id++;
      p.ref_index = i;
      p.query_index = j;
      out.push_back(p);
    }
  }
  return out;
}

PairSet attach_ground_truth(std::span<const PairTask> pairs, const SequenceManifest& manifest) {
  PairSet out;
  for (const PairTask& task : pairs) {
    if (task.ref_index >= manifest.size() || task.query_index >= manifest.size()) {
      throw Error(ErrorKind::kInvalidInput,
                  "pair " + std::to_string(task.pair_id) + " references an image outside the manifest");
    }
    if (task.ref_index == task.query_index) {
      throw Error(ErrorKind::kInvalidInput,
                  "pair " + std::to_string(task.pair_id) + " matches an image with itself");
    }
    const ImageEntry& ref = manifest.images[task.ref_index];
    const ImageEntry& query = manifest.images[task.query_index];
    if (!ref.has_pose || !query.has_pose) {
      const std::size_t missing = ref.has_pose ? task.query_index : task.ref_index;
      out.dropped.push_back({task.pair_id, task.ref_index, task.query_index,
                             "image " + std::to_string(missing) + " has no ground-truth pose"});
      continue;
    }
    PairTask p = task;
    p.gt_relative = relative_pose(ref.pose, query.pose);
    p.ref_calibration = ref.calibration;
    p.query_calibration = query.calibration;
    out.pairs.push_back(std::move(p));
  }
  return out;
}

PairSet generate_short_baseline_pairs(const SequenceManifest& manifest, std::size_t k) {
  if (!(manifest.fps > 0.0)) {
    throw Error(ErrorKind::kUsage, "short-baseline pairing requires an ordered sequence (fps > 0)");
  }
  return attach_ground_truth(short_baseline_index_pairs(manifest.size(), k), manifest);
}

PairSet generate_wide_exhaustive(const SequenceManifest& manifest) {
  return attach_ground_truth(wide_exhaustive_index_pairs(manifest.size()), manifest);
}

PairSet generate_wide_window_pairs(const SequenceManifest& manifest, std::size_t window) {
  return attach_ground_truth(wide_window_index_pairs(manifest.size(), window), manifest);
}

PairSet generate_pairs(const SequenceManifest& manifest, const PairGenConfig& cfg) {
  cfg.validate();
  switch (cfg.mode) {
    case PairMode::kShortFragment: return generate_short_baseline_pairs(manifest, cfg.k);
    case PairMode::kWideExhaustive: return generate_wide_exhaustive(manifest);
    case PairMode::kWideWindow: return generate_wide_window_pairs(manifest, cfg.window);
  }
  return {};
}

SequenceManifest subsample_fragments(const SequenceManifest& manifest, std::size_t k) {
  if (k < 1) throw Error(ErrorKind::kInvalidInput, "subsample_fragments needs k >= 1");
  if (!(manifest.fps > 0.0)) {
    throw Error(ErrorKind::kUsage, "subsampling fragments requires an ordered sequence (fps > 0)");
  }
  SequenceManifest out;
  out.name = manifest.name + "-wide";
  out.fps = manifest.fps / static_cast<double>(k);
  for (std::size_t i = 0; i < manifest.size(); i += k) out.images.push_back(manifest.images[i]);
  return out;
}

std::string format_pair_list(std::span<const PairTask> pairs) {
  std::string out(kPairListHeader);
  out += "\n";
  for (const PairTask& p : pairs) {
    out += std::to_string(p.pair_id) + "," + std::to_string(p.ref_index) + "," +
           std::to_string(p.query_index) + "\n";
  }
  return out;
}

std::vector<PairTask> parse_pair_list(std::string_view text, const std::string& source) {
  const std::vector<std::string_view> lines = detail::split_lines(text);
  if (lines.empty() || detail::trim(lines[0]) != kPairListHeader) {
    throw ParseError(source, 1, "expected header 'pair_id,ref,query'");
  }
  std::vector<PairTask> out;
  std::map<std::int64_t, std::size_t> seen;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    if (detail::trim(lines[i]).empty()) continue;
    const std::vector<std::string_view> cells = detail::split_char(lines[i], ',');
    if (cells.size() != 3) throw ParseError(source, line_no, "expected 3 columns");
    const long long id = detail::parse_int(detail::trim(cells[0]), source, line_no);
    const long long ref = detail::parse_int(detail::trim(cells[1]), source, line_no);
    const long long query = detail::parse_int(detail::trim(cells[2]), source, line_no);
    if (id < 0 || ref < 0 || query < 0) throw ParseError(source, line_no, "negative value");
    if (ref == query) throw ParseError(source, line_no, "ref equals query");
    if (!seen.emplace(id, line_no).second) {
      throw ParseError(source, line_no, "duplicate pair_id " + std::to_string(id));
    }
    PairTask p;
    p.pair_id = id;
    p.ref_index = static_cast<std::size_t>(ref);
    p.query_index = static_cast<std::size_t>(query);
    out.push_back(p);
  }
  return out;
}

void write_pair_list(std::span<const PairTask> pairs, const std::string& path) {
  write_text_file(path, format_pair_list(pairs));
}

std::vector<PairTask> read_pair_list(const std::string& path) {
  return parse_pair_list(read_text_file(path), path);
}

std::string pair_list_digest(std::span<const PairTask> pairs) {
  return digest_hex(format_pair_list(pairs));
}

}  // namespace matchbench

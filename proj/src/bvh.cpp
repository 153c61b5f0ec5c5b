#include "skm/bvh.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "skm/io.hpp"

namespace skm {

namespace {

struct Token {
  std::string text;
  int line = 0;
  int column = 0;
};

class Lexer {
 public:
  explicit Lexer(std::istream& in) : in_(in) {}

  bool next(Token& tok) {
    int c;
    while ((c = get()) != EOF && std::isspace(c)) {
    }
    if (c == EOF) return false;
    tok.line = tok_line_;
    tok.column = tok_col_;
    tok.text.assign(1, static_cast<char>(c));
    if (c == '{' || c == '}') return true;
    while ((c = in_.peek()) != EOF && !std::isspace(c) && c != '{' && c != '}') {
      tok.text.push_back(static_cast<char>(get()));
    }
    return true;
  }

  Token expect(const char* what) {
    Token tok;
    if (!next(tok)) throw BvhError(std::string("unexpected end of file, expected ") + what, line_, col_);
    return tok;
  }

  void expect_word(const std::string& word) {
    Token tok = expect(word.c_str());
    if (tok.text != word) {
      throw BvhError("expected '" + word + "', found '" + tok.text + "'", tok.line, tok.column);
    }
  }

  double expect_number(const char* what) {
    Token tok = expect(what);
    return to_number(tok, what);
  }

  static double to_number(const Token& tok, const char* what) {
    try {
      std::size_t used = 0;
      const double v = std::stod(tok.text, &used);
      if (used != tok.text.size()) throw std::invalid_argument(tok.text);
      return v;
    } catch (const std::exception&) {
      throw BvhError(std::string("expected ") + what + ", found '" + tok.text + "'", tok.line,
                     tok.column);
    }
  }

  int line() const { return line_; }
  int column() const { return col_; }

 private:
  int get() {
    const int c = in_.get();
    tok_line_ = line_;
    tok_col_ = col_;
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else if (c != EOF) {
      ++col_;
    }
    return c;
  }

  std::istream& in_;
  int line_ = 1;
  int col_ = 1;
  int tok_line_ = 1;
  int tok_col_ = 1;
};

struct ParsedJoint {
  int node = 0;
  bool has_position = false;
  std::array<int, 3> position_slots{-1, -1, -1};  // index within the joint's channels
  std::array<int, 3> rotation_slots{-1, -1, -1};
  int channel_count = 0;
  int channel_base = 0;  // offset into a frame's value row
};

class Parser {
 public:
  explicit Parser(std::istream& in) : lex_(in) {}

  BvhDocument run() {
    lex_.expect_word("HIERARCHY");
    Token tok = lex_.expect("ROOT");
    if (tok.text != "ROOT") throw BvhError("expected 'ROOT', found '" + tok.text + "'", tok.line, tok.column);
    Token name = lex_.expect("root name");
    parse_joint(name.text, -1, true);

    std::vector<int> parents;
    for (std::size_t n = 1; n < node_parent_.size(); ++n) {
      const int pn = node_parent_[n];
      parents.push_back(pn == 0 ? -1 : pn - 1);
    }
    doc_.skeleton.topology = SkeletonTopology(parents);
    doc_.skeleton.offsets.resize(static_cast<Eigen::Index>(offsets_.size()) - 1, 3);
    for (std::size_t n = 1; n < offsets_.size(); ++n) {
      doc_.skeleton.offsets.row(static_cast<Eigen::Index>(n) - 1) = offsets_[n].transpose();
    }
    doc_.skeleton.root_offset = offsets_[0];

    parse_motion();
    doc_.skeleton.infer_tags();
    return std::move(doc_);
  }

 private:
  void parse_joint(const std::string& name, int parent_node, bool is_root) {
    const int node = static_cast<int>(node_parent_.size());
    node_parent_.push_back(parent_node);
    doc_.skeleton.node_names.push_back(name);
    doc_.skeleton.is_end_site.push_back(false);
    doc_.skeleton.rotation_orders.push_back(EulerOrder{});
    offsets_.emplace_back(Eigen::Vector3d::Zero());

    lex_.expect_word("{");
    Token tok = lex_.expect("OFFSET");
    if (tok.text != "OFFSET") throw BvhError("expected 'OFFSET', found '" + tok.text + "'", tok.line, tok.column);
    for (int k = 0; k < 3; ++k) offsets_[node][k] = lex_.expect_number("offset value");

    ParsedJoint joint;
    joint.node = node;
    tok = lex_.expect("CHANNELS");
    if (tok.text == "CHANNELS") {
      parse_channels(joint, is_root, tok);
      tok = lex_.expect("JOINT, End Site or '}'");
    } else if (is_root) {
      throw BvhError("root joint needs a CHANNELS line", tok.line, tok.column);
    }
    joints_.push_back(joint);

    while (tok.text != "}") {
      if (tok.text == "JOINT") {
        Token child = lex_.expect("joint name");
        parse_joint(child.text, node, false);
      } else if (tok.text == "End") {
        lex_.expect_word("Site");
        parse_end_site(name + "_End", node);
      } else {
        throw BvhError("unexpected '" + tok.text + "' in joint block", tok.line, tok.column);
      }
      tok = lex_.expect("JOINT, End Site or '}'");
    }
  }

  void parse_channels(ParsedJoint& joint, bool is_root, const Token& at) {
    const double count_f = lex_.expect_number("channel count");
    const int count = static_cast<int>(count_f);
    if (count != count_f || count < 0) throw BvhError("bad channel count", at.line, at.column);
    joint.channel_count = count;
    joint.channel_base = total_channels_;
    total_channels_ += count;
    std::string rot_axes;
    int positions = 0;
    for (int k = 0; k < count; ++k) {
      Token ch = lex_.expect("channel name");
      if (ch.text.size() != 9 || (ch.text.substr(1) != "position" && ch.text.substr(1) != "rotation")) {
        throw BvhError("unknown channel '" + ch.text + "'", ch.line, ch.column);
      }
      const char axis_c = static_cast<char>(std::toupper(static_cast<unsigned char>(ch.text[0])));
      if (axis_c < 'X' || axis_c > 'Z') {
        throw BvhError("unknown channel '" + ch.text + "'", ch.line, ch.column);
      }
      const int axis = axis_c - 'X';
      if (ch.text.substr(1) == "position") {
        if (!is_root) {
          throw BvhError("unsupported channel arrangement: position channels on non-root joint",
                         ch.line, ch.column);
        }
        if (joint.position_slots[axis] >= 0) {
          throw BvhError("unsupported channel arrangement: duplicate position axis", ch.line, ch.column);
        }
        joint.position_slots[axis] = k;
        ++positions;
      } else {
        const int r = static_cast<int>(rot_axes.size());
        if (r >= 3) throw BvhError("unsupported channel arrangement: more than 3 rotations", ch.line, ch.column);
        joint.rotation_slots[r] = k;
        rot_axes.push_back(axis_c);
      }
    }
    if (positions != 0 && positions != 3) {
      throw BvhError("unsupported channel arrangement: partial position channels", at.line, at.column);
    }
    joint.has_position = positions == 3;
    if (rot_axes.size() == 3) {
      try {
        doc_.skeleton.rotation_orders[joint.node] = parse_euler_order(rot_axes);
      } catch (const std::invalid_argument& e) {
        throw BvhError(std::string("unsupported channel arrangement: ") + e.what(), at.line, at.column);
      }
    } else if (!rot_axes.empty() || is_root) {
      throw BvhError("unsupported channel arrangement: need exactly 3 rotation channels",
                     at.line, at.column);
    }
  }

  void parse_end_site(const std::string& name, int parent_node) {
    const int node = static_cast<int>(node_parent_.size());
    node_parent_.push_back(parent_node);
    doc_.skeleton.node_names.push_back(name);
    doc_.skeleton.is_end_site.push_back(true);
    doc_.skeleton.rotation_orders.push_back(EulerOrder{});
    offsets_.emplace_back(Eigen::Vector3d::Zero());
    lex_.expect_word("{");
    lex_.expect_word("OFFSET");
    for (int k = 0; k < 3; ++k) offsets_[node][k] = lex_.expect_number("offset value");
    lex_.expect_word("}");
  }

  void parse_motion() {
    lex_.expect_word("MOTION");
    lex_.expect_word("Frames:");
    Token frames_tok = lex_.expect("frame count");
    const double frames_f = Lexer::to_number(frames_tok, "frame count");
    const int frames = static_cast<int>(frames_f);
    if (frames != frames_f || frames < 1) {
      throw BvhError("frame count must be a positive integer", frames_tok.line, frames_tok.column);
    }
    lex_.expect_word("Frame");
    lex_.expect_word("Time:");
    const double frame_time = lex_.expect_number("frame time");

    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(frames) * total_channels_);
    Token tok;
    while (lex_.next(tok)) values.push_back(Lexer::to_number(tok, "channel value"));
    if (values.size() != static_cast<std::size_t>(frames) * total_channels_) {
      throw BvhError("frame count mismatch: declared " + std::to_string(frames) + " frames of " +
                         std::to_string(total_channels_) + " channels, found " +
                         std::to_string(values.size()) + " values",
                     lex_.line(), lex_.column());
    }

    const auto& sk = doc_.skeleton;
    MotionClip& clip = doc_.clip;
    clip = MotionClip::rest(sk.offsets, frames, frame_time);
    for (int t = 0; t < frames; ++t) {
      const double* row = values.data() + static_cast<std::size_t>(t) * total_channels_;
      for (const auto& joint : joints_) {
        const double* ch = row + joint.channel_base;
        Eigen::Quaterniond q = Eigen::Quaterniond::Identity();
        if (joint.rotation_slots[0] >= 0) {
          const Eigen::Vector3d deg(ch[joint.rotation_slots[0]], ch[joint.rotation_slots[1]],
                                    ch[joint.rotation_slots[2]]);
          q = euler_to_quaternion(deg, sk.rotation_orders[joint.node]);
        }
        if (joint.node == 0) {
          Eigen::Vector3d pos = sk.root_offset;
          if (joint.has_position) {
            for (int a = 0; a < 3; ++a) pos[a] += ch[joint.position_slots[a]];
          }
          clip.root_translation[t] = pos;
          clip.root_orientation[t] = q;
        } else {
          clip.rotation(t, joint.node - 1) = q;
        }
      }
    }
    clip.enforce_hemisphere_continuity();
  }

  Lexer lex_;
  BvhDocument doc_;
  std::vector<int> node_parent_;
  std::vector<Eigen::Vector3d> offsets_;
  std::vector<ParsedJoint> joints_;
  int total_channels_ = 0;
};

void write_number(std::ostream& out, double v) {
  char buf[64];
  if (std::abs(v) < 5e-7) v = 0.0;  // avoid "-0.000000"
  std::snprintf(buf, sizeof buf, "%.6f", v);
  out << buf;
}

void write_joint(std::ostream& out, const Skeleton& sk, int node, int depth,
                 std::vector<int>& channel_nodes) {
  const std::string indent(static_cast<std::size_t>(depth) * 2, ' ');
  const auto& topo = sk.topology;
  const Eigen::Vector3d offset = node == 0 ? sk.root_offset
                                           : Eigen::Vector3d(sk.offsets.row(node - 1).transpose());
  if (node == 0) {
    out << "ROOT " << sk.node_names[0] << "\n";
  } else if (sk.is_end_site[node]) {
    out << indent << "End Site\n";
  } else {
    out << indent << "JOINT " << sk.node_names[node] << "\n";
  }
  out << indent << "{\n" << indent << "  OFFSET ";
  for (int k = 0; k < 3; ++k) {
    write_number(out, offset[k]);
    out << (k < 2 ? " " : "\n");
  }
  if (!sk.is_end_site[node]) {
    const std::string order = sk.rotation_orders[node].name();
    out << indent << "  CHANNELS " << (node == 0 ? 6 : 3);
    if (node == 0) out << " Xposition Yposition Zposition";
    for (char c : order) out << ' ' << c << "rotation";
    out << "\n";
    channel_nodes.push_back(node);
    for (int e : topo.edges_below(node)) write_joint(out, sk, topo.child_node(e), depth + 1, channel_nodes);
  }
  out << indent << "}\n";
}

}  // namespace

BvhDocument parse_bvh(std::istream& in) { return Parser(in).run(); }

BvhDocument parse_bvh_string(const std::string& text) {
  std::istringstream in(text);
  return parse_bvh(in);
}

BvhDocument load_bvh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return parse_bvh(in);
}

void write_bvh(std::ostream& out, const Skeleton& skeleton, const MotionClip& clip) {
  if (clip.num_edges() != skeleton.num_edges()) {
    throw std::invalid_argument("write_bvh: clip and skeleton edge counts differ");
  }
  out << "HIERARCHY\n";
  std::vector<int> channel_nodes;
  write_joint(out, skeleton, 0, 0, channel_nodes);
  out << "MOTION\n";
  out << "Frames: " << clip.num_frames() << "\n";
  char buf[64];
  std::snprintf(buf, sizeof buf, "Frame Time: %.6f\n", clip.frame_time);
  out << buf;
  for (int t = 0; t < clip.num_frames(); ++t) {
    bool first = true;
    auto emit = [&](double v) {
      if (!first) out << ' ';
      write_number(out, v);
      first = false;
    };
    for (int node : channel_nodes) {
      Eigen::Quaterniond q;
      if (node == 0) {
        const Eigen::Vector3d p = clip.root_translation[t] - skeleton.root_offset;
        for (int a = 0; a < 3; ++a) emit(p[a]);
        q = clip.root_orientation[t];
      } else {
        q = clip.rotation(t, node - 1);
      }
      const Eigen::Vector3d deg = quaternion_to_euler(q, skeleton.rotation_orders[node]);
      for (int a = 0; a < 3; ++a) emit(deg[a]);
    }
    out << "\n";
  }
}

std::string write_bvh_string(const Skeleton& skeleton, const MotionClip& clip) {
  std::ostringstream out;
  write_bvh(out, skeleton, clip);
  return out.str();
}

void save_bvh(const std::string& path, const Skeleton& skeleton, const MotionClip& clip) {
  write_file_atomic(path, write_bvh_string(skeleton, clip));
}

}  // namespace skm

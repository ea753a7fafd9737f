#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <algorithm>
#include <fstream>
#include <locale>
#include <map>
#include <set>
#include <sstream>

#include "cycleik/chain.hpp"
#include "cycleik/log.hpp"

namespace cycleik {
namespace {

namespace pt = boost::property_tree;

struct RawJoint {
  JointSpec spec;
  std::string type;
  std::string parent;
  std::string child;
  bool has_limit = false;
};

Eigen::Vector3d parse_vector(const std::string& text, const std::string& what) {
  std::istringstream in(text);
  in.imbue(std::locale::classic());
  Eigen::Vector3d v;
  if (!(in >> v.x() >> v.y() >> v.z())) {
    throw ParseError("cannot parse 3-vector '" + text + "' in " + what);
  }
  std::string rest;
  if (in >> rest) throw ParseError("trailing data in 3-vector '" + text + "' in " + what);
  return v;
}

double parse_scalar(const std::string& text, const std::string& what) {
  std::istringstream in(text);
  in.imbue(std::locale::classic());
  double v = 0.0;
  if (!(in >> v)) throw ParseError("cannot parse number '" + text + "' in " + what);
  return v;
}

std::string required_attr(const pt::ptree& node, const std::string& attr,
                          const std::string& what) {
  auto value = node.get_optional<std::string>("<xmlattr>." + attr);
  if (!value) throw ParseError(what + " is missing attribute '" + attr + "'");
  return *value;
}

RawJoint read_joint(const pt::ptree& node, std::set<std::string>& ignored) {
  RawJoint raw;
  raw.spec.name = required_attr(node, "name", "joint");
  raw.type = required_attr(node, "type", "joint '" + raw.spec.name + "'");
  const std::string where = "joint '" + raw.spec.name + "'";
  bool has_parent = false;
  bool has_child = false;
  for (const auto& [tag, child] : node) {
    if (tag == "<xmlattr>" || tag == "<xmlcomment>") continue;
    if (tag == "parent") {
      raw.parent = required_attr(child, "link", where + " <parent>");
      has_parent = true;
    } else if (tag == "child") {
      raw.child = required_attr(child, "link", where + " <child>");
      has_child = true;
    } else if (tag == "origin") {
      if (auto xyz = child.get_optional<std::string>("<xmlattr>.xyz")) {
        raw.spec.origin_translation = parse_vector(*xyz, where + " origin xyz");
      }
      if (auto rpy = child.get_optional<std::string>("<xmlattr>.rpy")) {
        raw.spec.origin_rpy = parse_vector(*rpy, where + " origin rpy");
      }
    } else if (tag == "axis") {
      raw.spec.axis = parse_vector(required_attr(child, "xyz", where + " <axis>"), where + " axis");
    } else if (tag == "limit") {
      raw.has_limit = true;
      raw.spec.limit_lower = parse_scalar(child.get<std::string>("<xmlattr>.lower", "0"),
                                          where + " limit lower");
      raw.spec.limit_upper = parse_scalar(child.get<std::string>("<xmlattr>.upper", "0"),
                                          where + " limit upper");
    } else {
      ignored.insert("joint/" + tag);
    }
  }
  if (!has_parent || !has_child) throw ParseError(where + " needs <parent> and <child>");
  return raw;
}

}  // namespace

KinematicChain parse_chain(std::string_view urdf_text, std::string_view base,
                           std::string_view tip) {
  pt::ptree tree;
  try {
    std::istringstream in{std::string(urdf_text)};
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    throw ParseError(std::string("malformed XML: ") + e.what());
  }
  auto robot = tree.get_child_optional("robot");
  if (!robot) throw ParseError("no <robot> element");

  std::set<std::string> links;
  std::vector<RawJoint> joints;
  std::set<std::string> ignored;
  for (const auto& [tag, node] : *robot) {
    if (tag == "<xmlattr>" || tag == "<xmlcomment>") continue;
    if (tag == "link") {
      links.insert(required_attr(node, "name", "link"));
      for (const auto& [sub, unused] : node) {
        if (sub != "<xmlattr>" && sub != "<xmlcomment>") ignored.insert("link/" + sub);
      }
    } else if (tag == "joint") {
      joints.push_back(read_joint(node, ignored));
    } else {
      ignored.insert(tag);
    }
  }
  if (!ignored.empty()) {
    std::string list;
    for (const auto& name : ignored) list += (list.empty() ? "" : ", ") + name;
    warn("ignoring unsupported URDF elements: " + list);
  }

  const std::string base_name(base);
  const std::string tip_name(tip);
  if (!links.contains(base_name)) throw ParseError("base link '" + base_name + "' not found");
  if (!links.contains(tip_name)) throw ParseError("tip link '" + tip_name + "' not found");

  std::map<std::string, std::vector<const RawJoint*>> parent_joints;
  for (const RawJoint& joint : joints) parent_joints[joint.child].push_back(&joint);

  // Walk upward from the tip until the base is reached.
  std::vector<const RawJoint*> path;
  std::set<std::string> visited;
  std::string link = tip_name;
  while (link != base_name) {
    if (!visited.insert(link).second) throw ParseError("kinematic loop through link '" + link + "'");
    auto it = parent_joints.find(link);
    if (it == parent_joints.end()) {
      throw ParseError("no serial path from '" + base_name + "' to '" + tip_name + "'");
    }
    if (it->second.size() > 1) {
      throw ParseError("link '" + link + "' has several parent joints; path is not serial");
    }
    path.push_back(it->second.front());
    link = it->second.front()->parent;
  }
  std::reverse(path.begin(), path.end());

  std::vector<JointSpec> specs;
  for (const RawJoint* raw : path) {
    JointSpec spec = raw->spec;
    if (raw->type == "revolute") {
      spec.kind = JointKind::kRevolute;
    } else if (raw->type == "prismatic") {
      spec.kind = JointKind::kPrismatic;
    } else if (raw->type == "fixed") {
      spec.kind = JointKind::kFixed;
    } else {
      throw ParseError("joint '" + spec.name + "' has unsupported type '" + raw->type + "'");
    }
    if (spec.kind != JointKind::kFixed && !raw->has_limit) {
      throw ParseError("joint '" + spec.name + "' has no <limit>");
    }
    specs.push_back(std::move(spec));
  }
  try {
    return KinematicChain(base_name, tip_name, std::move(specs));
  } catch (const ValueError& e) {
    throw ParseError(e.what());
  }
}

KinematicChain load_chain(const std::filesystem::path& path, std::string_view base,
                          std::string_view tip) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open robot description '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_chain(text.str(), base, tip);
}

}  // namespace cycleik

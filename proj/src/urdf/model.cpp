#include "skillsim/urdf/model.hpp"

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "skillsim/error.hpp"
#include "skillsim/io_util.hpp"

namespace skillsim::urdf {

namespace pt = boost::property_tree;

JointLimits effective_limits(const Joint& joint) {
  if (joint.limits) return *joint.limits;
  if (joint.kind == JointKind::Continuous) {
    const double half = 4.0 * M_PI;
    return {-half, half};
  }
  return {0.0, 0.0};
}

const char* joint_kind_name(JointKind k) {
  switch (k) {
    case JointKind::Revolute: return "revolute";
    case JointKind::Prismatic: return "prismatic";
    case JointKind::Fixed: return "fixed";
    case JointKind::Continuous: return "continuous";
  }
  return "?";
}

void InertialProps::validate(const std::string& context) const {
  if (!(mass > 0.0) || !std::isfinite(mass))
    throw InvalidAsset(context + ": inertial mass must be > 0");
  if ((inertia - inertia.transpose()).cwiseAbs().maxCoeff() > 1e-9)
    throw InvalidAsset(context + ": inertia tensor not symmetric");
  Eigen::SelfAdjointEigenSolver<Mat3> es(inertia);
  const Vec3 ev = es.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  if (ev.minCoeff() < -1e-9 * scale)
    throw InvalidAsset(context + ": inertia tensor not positive semi-definite");
  // Triangle inequality on principal moments.
  const double tol = 1e-9 * scale;
  if (ev(0) + ev(1) < ev(2) - tol || ev(0) + ev(2) < ev(1) - tol ||
      ev(1) + ev(2) < ev(0) - tol)
    throw InvalidAsset(context +
                       ": principal moments violate the triangle inequality");
}

const Link* AssetModel::find_link(const std::string& n) const {
  for (const auto& l : links)
    if (l.name == n) return &l;
  return nullptr;
}

const Joint* AssetModel::find_joint(const std::string& n) const {
  for (const auto& j : joints)
    if (j.name == n) return &j;
  return nullptr;
}

const Joint* AssetModel::parent_joint(const std::string& link) const {
  for (const auto& j : joints)
    if (j.child == link) return &j;
  return nullptr;
}

void AssetModel::validate() {
  if (name.empty()) throw InvalidAsset("asset has no name");
  if (links.empty()) throw InvalidAsset(name + ": asset has no links");

  std::set<std::string> link_names, joint_names;
  for (const auto& l : links)
    if (!link_names.insert(l.name).second)
      throw DuplicateName("link \"" + l.name + "\" in asset " + name);
  for (const auto& j : joints)
    if (!joint_names.insert(j.name).second)
      throw DuplicateName("joint \"" + j.name + "\" in asset " + name);

  std::map<std::string, int> parent_count;
  for (const auto& j : joints) {
    if (!link_names.count(j.parent))
      throw DanglingLinkRef("joint \"" + j.name + "\" parent names \"" +
                            j.parent + "\" which is not a link");
    if (!link_names.count(j.child))
      throw DanglingLinkRef("joint \"" + j.name + "\" child names \"" +
                            j.child + "\" which is not a link");
    if (++parent_count[j.child] > 1)
      throw KinematicCycle("link \"" + j.child +
                           "\" has more than one parent joint");

    const bool needs_limits =
        j.kind == JointKind::Revolute || j.kind == JointKind::Prismatic;
    if (needs_limits) {
      if (!j.limits)
        throw MissingLimits("joint \"" + j.name + "\" (" +
                            joint_kind_name(j.kind) + ") has no limits");
      if (!(j.limits->lower <= j.limits->upper))
        throw InvalidAsset("joint \"" + j.name + "\" limits inverted");
      if (std::abs(j.axis.norm() - 1.0) > 1e-9)
        throw InvalidAsset("joint \"" + j.name + "\" axis is not unit length");
    } else if (j.kind == JointKind::Continuous) {
      if (j.limits)
        throw InvalidAsset("continuous joint \"" + j.name +
                           "\" must not carry limits");
      if (std::abs(j.axis.norm() - 1.0) > 1e-9)
        throw InvalidAsset("joint \"" + j.name + "\" axis is not unit length");
    } else if (j.limits) {
      throw InvalidAsset("fixed joint \"" + j.name + "\" must not carry limits");
    }
  }

  // Exactly one root, and every link reachable from it (tree, no cycles).
  std::vector<std::string> roots;
  for (const auto& l : links)
    if (!parent_count.count(l.name)) roots.push_back(l.name);
  if (roots.empty())
    throw KinematicCycle("asset " + name + " has no root link (cycle)");
  if (roots.size() > 1) {
    std::string msg = "asset " + name + " has multiple roots:";
    for (const auto& r : roots) msg += " " + r;
    throw InvalidTree(msg);
  }
  root_link = roots.front();

  std::set<std::string> reached{root_link};
  bool grew = true;
  while (grew) {
    grew = false;
    for (const auto& j : joints) {
      if (reached.count(j.parent) && !reached.count(j.child)) {
        reached.insert(j.child);
        grew = true;
      }
    }
  }
  if (reached.size() != links.size())
    throw KinematicCycle("asset " + name +
                         " contains links unreachable from the root");

  for (const auto& l : links) {
    if (l.inertial) l.inertial->validate("link \"" + l.name + "\"");
  }
}

namespace {

Vec3 parse_vec3(const std::string& text, const std::string& context) {
  std::istringstream in(text);
  Vec3 v;
  if (!(in >> v.x() >> v.y() >> v.z()))
    throw MalformedXml("cannot parse 3-vector \"" + text + "\" in " + context);
  return v;
}

double attr_double(const pt::ptree& el, const std::string& attr, double fallback,
                   bool* present = nullptr) {
  auto opt = el.get_optional<std::string>("<xmlattr>." + attr);
  if (present) *present = opt.has_value();
  if (!opt) return fallback;
  try {
    size_t used = 0;
    double v = std::stod(*opt, &used);
    return v;
  } catch (const std::exception&) {
    throw MalformedXml("bad numeric attribute " + attr + "=\"" + *opt + "\"");
  }
}

std::string attr_string(const pt::ptree& el, const std::string& attr,
                        const std::string& context) {
  auto opt = el.get_optional<std::string>("<xmlattr>." + attr);
  if (!opt) throw MalformedXml(context + " missing attribute \"" + attr + "\"");
  return *opt;
}

Transform parse_origin(const pt::ptree& el) {
  Transform t;
  if (auto origin = el.get_child_optional("origin")) {
    if (auto xyz = origin->get_optional<std::string>("<xmlattr>.xyz"))
      t.pos = parse_vec3(*xyz, "origin");
    if (auto rpy = origin->get_optional<std::string>("<xmlattr>.rpy")) {
      Vec3 v = parse_vec3(*rpy, "origin rpy");
      t.rot = quat_from_rpy(v.x(), v.y(), v.z());
    }
  }
  return t;
}

std::optional<Geometry> parse_geometry(const pt::ptree& link_el) {
  // Prefer visual geometry, fall back to collision.
  for (const char* tag : {"visual", "collision"}) {
    auto section = link_el.get_child_optional(tag);
    if (!section) continue;
    auto geom = section->get_child_optional("geometry");
    if (!geom) continue;

    Vec3 origin{0, 0, 0};
    if (auto o = section->get_child_optional("origin"))
      if (auto xyz = o->get_optional<std::string>("<xmlattr>.xyz"))
        origin = parse_vec3(*xyz, "geometry origin");

    if (auto box = geom->get_child_optional("box")) {
      Geometry g;
      g.kind = Geometry::Kind::Box;
      g.box_size =
          parse_vec3(attr_string(*box, "size", "box geometry"), "box size");
      g.origin = origin;
      return g;
    }
    if (auto mesh = geom->get_child_optional("mesh")) {
      Geometry g;
      g.kind = Geometry::Kind::Mesh;
      g.mesh_path = attr_string(*mesh, "filename", "mesh geometry");
      g.origin = origin;
      return g;
    }
  }
  return std::nullopt;
}

Link parse_link(const pt::ptree& el) {
  Link link;
  link.name = attr_string(el, "name", "link");
  if (auto inertial = el.get_child_optional("inertial")) {
    InertialProps props;
    if (auto mass_el = inertial->get_child_optional("mass"))
      props.mass = attr_double(*mass_el, "value", 0.0);
    if (auto origin = inertial->get_child_optional("origin")) {
      if (auto xyz = origin->get_optional<std::string>("<xmlattr>.xyz"))
        props.com = parse_vec3(*xyz, "inertial origin");
    }
    if (auto tensor = inertial->get_child_optional("inertia")) {
      const double ixx = attr_double(*tensor, "ixx", 0.0);
      const double iyy = attr_double(*tensor, "iyy", 0.0);
      const double izz = attr_double(*tensor, "izz", 0.0);
      const double ixy = attr_double(*tensor, "ixy", 0.0);
      const double ixz = attr_double(*tensor, "ixz", 0.0);
      const double iyz = attr_double(*tensor, "iyz", 0.0);
      props.inertia << ixx, ixy, ixz, ixy, iyy, iyz, ixz, iyz, izz;
    }
    link.inertial = props;
  }
  link.geometry = parse_geometry(el);
  return link;
}

Joint parse_joint(const pt::ptree& el) {
  Joint joint;
  joint.name = attr_string(el, "name", "joint");
  const std::string type = attr_string(el, "type", "joint \"" + joint.name + "\"");
  if (type == "revolute") joint.kind = JointKind::Revolute;
  else if (type == "prismatic") joint.kind = JointKind::Prismatic;
  else if (type == "fixed") joint.kind = JointKind::Fixed;
  else if (type == "continuous") joint.kind = JointKind::Continuous;
  else
    throw MalformedXml("joint \"" + joint.name + "\" has unsupported type \"" +
                       type + "\"");

  auto parent = el.get_child_optional("parent");
  auto child = el.get_child_optional("child");
  if (!parent || !child)
    throw MalformedXml("joint \"" + joint.name + "\" missing parent/child");
  joint.parent = attr_string(*parent, "link", "joint parent");
  joint.child = attr_string(*child, "link", "joint child");
  joint.origin = parse_origin(el);

  if (auto axis = el.get_child_optional("axis")) {
    joint.axis = parse_vec3(attr_string(*axis, "xyz", "axis"), "axis");
    const double n = joint.axis.norm();
    if (n < 1e-12)
      throw MalformedXml("joint \"" + joint.name + "\" axis has zero length");
    // Accept non-normalized input; store exactly unit length.
    if (std::abs(n - 1.0) > 1e-9) joint.axis /= n;
  }

  if (joint.kind == JointKind::Revolute || joint.kind == JointKind::Prismatic) {
    auto limit = el.get_child_optional("limit");
    if (!limit)
      throw MissingLimits("joint \"" + joint.name + "\" (" + type +
                          ") has no <limit> element");
    bool has_lower = false, has_upper = false;
    JointLimits lim;
    lim.lower = attr_double(*limit, "lower", 0.0, &has_lower);
    lim.upper = attr_double(*limit, "upper", 0.0, &has_upper);
    if (!has_lower && !has_upper)
      throw MissingLimits("joint \"" + joint.name +
                          "\" <limit> lacks lower/upper attributes");
    joint.limits = lim;
  }
  return joint;
}

void append_indent(std::string& out, int depth) {
  out.append(static_cast<size_t>(depth) * 2, ' ');
}

std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string vec3_attr(const Vec3& v) {
  return fmt_full(v.x()) + " " + fmt_full(v.y()) + " " + fmt_full(v.z());
}

}  // namespace

AssetModel parse_urdf(const std::string& xml_text) {
  pt::ptree doc;
  try {
    std::istringstream in(xml_text);
    pt::read_xml(in, doc);
  } catch (const pt::xml_parser_error& e) {
    throw MalformedXml(e.what());
  }

  auto robot = doc.get_child_optional("robot");
  if (!robot) throw MalformedXml("no <robot> root element");

  AssetModel asset;
  asset.name = robot->get<std::string>("<xmlattr>.name", "");
  if (asset.name.empty())
    throw MalformedXml("<robot> element has no name attribute");

  for (const auto& [tag, el] : *robot) {
    if (tag == "link") {
      asset.links.push_back(parse_link(el));
    } else if (tag == "joint") {
      asset.joints.push_back(parse_joint(el));
    } else if (tag == "physical_params") {
      PhysicalParams p;
      p.mass_kg = attr_double(el, "mass", 0.0);
      p.size_m = Vec3(attr_double(el, "length", 0.0),
                      attr_double(el, "width", 0.0),
                      attr_double(el, "height", 0.0));
      p.category = el.get<std::string>("<xmlattr>.category", "");
      asset.physical = p;
    }
    // Anything else (gazebo, transmission, vendor tags) is ignored.
  }

  asset.validate();
  return asset;
}

std::string emit_urdf(const AssetModel& asset_in) {
  AssetModel asset = asset_in;
  asset.validate();

  std::string out = "<?xml version=\"1.0\"?>\n";
  out += "<robot name=\"" + xml_escape(asset.name) + "\">\n";

  for (const auto& link : asset.links) {
    append_indent(out, 1);
    out += "<link name=\"" + xml_escape(link.name) + "\">\n";
    if (link.inertial) {
      const auto& ip = *link.inertial;
      append_indent(out, 2);
      out += "<inertial>\n";
      append_indent(out, 3);
      out += "<origin xyz=\"" + vec3_attr(ip.com) + "\" rpy=\"0 0 0\"/>\n";
      append_indent(out, 3);
      out += "<mass value=\"" + fmt_full(ip.mass) + "\"/>\n";
      append_indent(out, 3);
      out += "<inertia ixx=\"" + fmt_full(ip.inertia(0, 0)) + "\" ixy=\"" +
             fmt_full(ip.inertia(0, 1)) + "\" ixz=\"" +
             fmt_full(ip.inertia(0, 2)) + "\" iyy=\"" +
             fmt_full(ip.inertia(1, 1)) + "\" iyz=\"" +
             fmt_full(ip.inertia(1, 2)) + "\" izz=\"" +
             fmt_full(ip.inertia(2, 2)) + "\"/>\n";
      append_indent(out, 2);
      out += "</inertial>\n";
    }
    if (link.geometry) {
      for (const char* tag : {"visual", "collision"}) {
        append_indent(out, 2);
        out += std::string("<") + tag + ">\n";
        append_indent(out, 3);
        out += "<origin xyz=\"" + vec3_attr(link.geometry->origin) +
               "\" rpy=\"0 0 0\"/>\n";
        append_indent(out, 3);
        out += "<geometry>\n";
        append_indent(out, 4);
        if (link.geometry->kind == Geometry::Kind::Box) {
          out += "<box size=\"" + vec3_attr(link.geometry->box_size) + "\"/>\n";
        } else {
          out += "<mesh filename=\"" + xml_escape(link.geometry->mesh_path) +
                 "\"/>\n";
        }
        append_indent(out, 3);
        out += "</geometry>\n";
        append_indent(out, 2);
        out += std::string("</") + tag + ">\n";
      }
    }
    append_indent(out, 1);
    out += "</link>\n";
  }

  for (const auto& joint : asset.joints) {
    append_indent(out, 1);
    out += "<joint name=\"" + xml_escape(joint.name) + "\" type=\"" +
           joint_kind_name(joint.kind) + "\">\n";
    append_indent(out, 2);
    out += "<parent link=\"" + xml_escape(joint.parent) + "\"/>\n";
    append_indent(out, 2);
    out += "<child link=\"" + xml_escape(joint.child) + "\"/>\n";
    const Vec3 rpy = rpy_from_quat(joint.origin.rot);
    append_indent(out, 2);
    out += "<origin xyz=\"" + vec3_attr(joint.origin.pos) + "\" rpy=\"" +
           vec3_attr(rpy) + "\"/>\n";
    if (joint.kind != JointKind::Fixed) {
      append_indent(out, 2);
      out += "<axis xyz=\"" + vec3_attr(joint.axis) + "\"/>\n";
    }
    if (joint.limits) {
      append_indent(out, 2);
      out += "<limit lower=\"" + fmt_full(joint.limits->lower) +
             "\" upper=\"" + fmt_full(joint.limits->upper) +
             "\" effort=\"30\" velocity=\"1\"/>\n";
    }
    append_indent(out, 1);
    out += "</joint>\n";
  }

  if (asset.physical) {
    const auto& p = *asset.physical;
    append_indent(out, 1);
    out += "<physical_params mass=\"" + fmt_full(p.mass_kg) + "\" length=\"" +
           fmt_full(p.size_m.x()) + "\" width=\"" + fmt_full(p.size_m.y()) +
           "\" height=\"" + fmt_full(p.size_m.z()) + "\" category=\"" +
           xml_escape(p.category) + "\"/>\n";
  }

  out += "</robot>\n";
  return out;
}

std::string describe_asset(const AssetModel& asset) {
  std::string out = "asset: " + asset.name + "\n";
  out += "parts:\n";
  for (const auto& link : asset.links) out += "- " + link.name + "\n";
  if (asset.joints.empty()) {
    out += "joints: none\n";
    return out;
  }
  out += "joints:\n";
  for (const auto& joint : asset.joints) {
    out += "- " + joint.name + " (" + joint_kind_name(joint.kind) + ")";
    if (joint.limits) {
      out += ", range [" + fmt_compact(joint.limits->lower) + ", " +
             fmt_compact(joint.limits->upper) + "]";
    }
    out += "\n";
  }
  return out;
}

namespace {

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

bool vec_near(const Vec3& a, const Vec3& b, double tol) {
  return (a - b).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace

bool models_equal(const AssetModel& a, const AssetModel& b, double tol) {
  if (a.name != b.name || a.root_link != b.root_link) return false;
  if (a.links.size() != b.links.size() || a.joints.size() != b.joints.size())
    return false;
  for (size_t i = 0; i < a.links.size(); ++i) {
    const auto& la = a.links[i];
    const auto& lb = b.links[i];
    if (la.name != lb.name) return false;
    if (la.inertial.has_value() != lb.inertial.has_value()) return false;
    if (la.inertial) {
      if (!near(la.inertial->mass, lb.inertial->mass, tol)) return false;
      if (!vec_near(la.inertial->com, lb.inertial->com, tol)) return false;
      if ((la.inertial->inertia - lb.inertial->inertia).cwiseAbs().maxCoeff() >
          tol)
        return false;
    }
    if (la.geometry.has_value() != lb.geometry.has_value()) return false;
    if (la.geometry) {
      if (la.geometry->kind != lb.geometry->kind) return false;
      if (!vec_near(la.geometry->origin, lb.geometry->origin, tol))
        return false;
      if (la.geometry->kind == Geometry::Kind::Box) {
        if (!vec_near(la.geometry->box_size, lb.geometry->box_size, tol))
          return false;
      } else if (la.geometry->mesh_path != lb.geometry->mesh_path) {
        return false;
      }
    }
  }
  for (size_t i = 0; i < a.joints.size(); ++i) {
    const auto& ja = a.joints[i];
    const auto& jb = b.joints[i];
    if (ja.name != jb.name || ja.kind != jb.kind || ja.parent != jb.parent ||
        ja.child != jb.child)
      return false;
    if (ja.kind != JointKind::Fixed && !vec_near(ja.axis, jb.axis, tol))
      return false;
    if (!ja.origin.approx_equal(jb.origin, tol)) return false;
    if (ja.limits.has_value() != jb.limits.has_value()) return false;
    if (ja.limits && (!near(ja.limits->lower, jb.limits->lower, tol) ||
                      !near(ja.limits->upper, jb.limits->upper, tol)))
      return false;
  }
  if (a.physical.has_value() != b.physical.has_value()) return false;
  if (a.physical) {
    if (!near(a.physical->mass_kg, b.physical->mass_kg, tol)) return false;
    if (!vec_near(a.physical->size_m, b.physical->size_m, tol)) return false;
    if (a.physical->category != b.physical->category) return false;
  }
  return true;
}

}  // namespace skillsim::urdf

#include "leafsev/deteval.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "json.hpp"

#include "leafsev/errors.hpp"

namespace leafsev {

double iou(const Box& a, const Box& b) {
  const double ix = std::min(a.xmax, b.xmax) - std::max(a.xmin, b.xmin);
  const double iy = std::min(a.ymax, b.ymax) - std::max(a.ymin, b.ymin);
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

// ---- minimal XML subset (elements, text, entities; attributes skipped) -----

namespace {

struct XmlNode {
  std::string name;
  std::string text;
  std::vector<XmlNode> children;
  int line = 0;

  const XmlNode* child(const std::string& n) const {
    for (const auto& c : children) {
      if (c.name == n) return &c;
    }
    return nullptr;
  }
};

class XmlParser {
 public:
  explicit XmlParser(std::string_view s) : s_(s) {}

  XmlNode document() {
    skip_misc();
    if (eof() || peek() != '<') fail("expected a root element");
    XmlNode root = element();
    skip_misc();
    if (!eof()) fail("trailing content after the root element");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError("XML: " + msg, line_); }

  bool eof() const { return pos_ >= s_.size(); }
  char peek() const { return s_[pos_]; }

  char take() {
    const char c = s_[pos_++];
    if (c == '\n') ++line_;
    return c;
  }

  bool starts_with(std::string_view prefix) const { return s_.substr(pos_, prefix.size()) == prefix; }

  void skip_ws() {
    while (!eof() && (peek() == ' ' || peek() == '\t' || peek() == '\r' || peek() == '\n')) take();
  }

  void skip_until(std::string_view end, const char* what) {
    while (!eof()) {
      if (starts_with(end)) {
        for (std::size_t i = 0; i < end.size(); ++i) take();
        return;
      }
      take();
    }
    fail(std::string("unterminated ") + what);
  }

  void skip_misc() {
    while (true) {
      skip_ws();
      if (starts_with("<?")) {
        skip_until("?>", "processing instruction");
      } else if (starts_with("<!--")) {
        skip_until("-->", "comment");
      } else if (starts_with("<!")) {
        skip_until(">", "declaration");
      } else {
        return;
      }
    }
  }

  static bool name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.' ||
           c == ':';
  }

  std::string name_token() {
    std::string n;
    while (!eof() && name_char(peek())) n.push_back(take());
    if (n.empty()) fail("expected a tag name");
    return n;
  }

  std::string decode(const std::string& raw) const {
    std::string out;
    out.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (raw[i] != '&') {
        out.push_back(raw[i]);
        continue;
      }
      const auto semi = raw.find(';', i);
      if (semi == std::string::npos) throw ParseError("XML: unterminated entity", line_);
      const std::string ent = raw.substr(i + 1, semi - i - 1);
      if (ent == "lt") out.push_back('<');
      else if (ent == "gt") out.push_back('>');
      else if (ent == "amp") out.push_back('&');
      else if (ent == "quot") out.push_back('"');
      else if (ent == "apos") out.push_back('\'');
      else throw ParseError("XML: unknown entity &" + ent + ";", line_);
      i = semi;
    }
    return out;
  }

  XmlNode element() {
    take();  // '<'
    XmlNode node;
    node.line = line_;
    node.name = name_token();

    // Attributes are tolerated and dropped.
    while (true) {
      skip_ws();
      if (eof()) fail("unterminated start tag <" + node.name + ">");
      if (peek() == '>') {
        take();
        break;
      }
      if (starts_with("/>")) {
        take();
        take();
        return node;
      }
      const char c = take();
      if (c == '"' || c == '\'') {
        while (!eof() && peek() != c) take();
        if (eof()) fail("unterminated attribute value");
        take();
      }
    }

    std::string raw_text;
    while (true) {
      if (eof()) fail("missing closing tag </" + node.name + ">");
      if (peek() == '<') {
        if (starts_with("</")) {
          take();
          take();
          const std::string closing = name_token();
          if (closing != node.name) {
            fail("mismatched closing tag </" + closing + "> for <" + node.name + ">");
          }
          skip_ws();
          if (eof() || take() != '>') fail("malformed closing tag");
          node.text = decode(raw_text);
          return node;
        }
        if (starts_with("<!--")) {
          skip_until("-->", "comment");
          continue;
        }
        node.children.push_back(element());
        continue;
      }
      raw_text.push_back(take());
    }
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  int line_ = 1;
};

std::string trimmed(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

int int_child(const XmlNode& parent, const char* name) {
  const XmlNode* node = parent.child(name);
  if (!node) {
    throw ParseError("annotation: <" + parent.name + "> missing <" + name + ">", parent.line);
  }
  const std::string text = trimmed(node->text);
  try {
    std::size_t used = 0;
    const int v = std::stoi(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ParseError("annotation: <" + std::string(name) + "> is not an integer", node->line);
  }
}

}  // namespace

ParsedAnnotation parse_voc_xml(std::string_view bytes) {
  const XmlNode root = XmlParser(bytes).document();

  ParsedAnnotation out;
  const XmlNode* filename = root.child("filename");
  if (!filename) throw ParseError("annotation: missing <filename>", root.line);
  out.image = trimmed(filename->text);

  for (const auto& obj : root.children) {
    if (obj.name != "object") continue;
    const XmlNode* name = obj.child("name");
    if (!name) throw ParseError("annotation: <object> missing <name>", obj.line);
    const XmlNode* bnd = obj.child("bndbox");
    if (!bnd) throw ParseError("annotation: <object> missing <bndbox>", obj.line);

    GroundTruthBox gt;
    gt.image = out.image;
    gt.cls = trimmed(name->text);
    gt.box.xmin = int_child(*bnd, "xmin");
    gt.box.ymin = int_child(*bnd, "ymin");
    gt.box.xmax = int_child(*bnd, "xmax");
    gt.box.ymax = int_child(*bnd, "ymax");
    if (gt.box.xmax <= gt.box.xmin || gt.box.ymax <= gt.box.ymin) {
      throw std::invalid_argument("annotation: degenerate bndbox (xmax <= xmin or ymax <= ymin)");
    }
    out.boxes.push_back(std::move(gt));
  }
  return out;
}

std::vector<Detection> parse_detections_jsonl(std::string_view text) {
  std::vector<Detection> out;
  int line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (trimmed(std::string(line)).empty()) continue;

    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      Detection d;
      d.image = j.at("image").get<std::string>();
      d.cls = j.at("class").get<std::string>();
      d.confidence = j.at("confidence").get<double>();
      const auto& box = j.at("box");
      if (!box.is_array() || box.size() != 4) throw std::runtime_error("box must have 4 numbers");
      d.box = Box{box[0].get<double>(), box[1].get<double>(), box[2].get<double>(),
                  box[3].get<double>()};
      if (d.confidence < 0.0 || d.confidence > 1.0) {
        throw std::runtime_error("confidence outside [0, 1]");
      }
      if (d.box.xmax <= d.box.xmin || d.box.ymax <= d.box.ymin) {
        throw std::runtime_error("degenerate box");
      }
      out.push_back(std::move(d));
    } catch (const std::exception& e) {
      throw ParseError(std::string("detections: ") + e.what(), line_no);
    }
  }
  return out;
}

ApResult average_precision(const std::vector<Detection>& dets,
                           const std::vector<GroundTruthBox>& gts, double iou_thr,
                           Interpolation interp) {
  if (!(iou_thr > 0.0 && iou_thr <= 1.0)) {
    throw std::invalid_argument("average_precision: iou threshold must be in (0, 1]");
  }

  std::vector<std::size_t> order(dets.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dets[a].confidence > dets[b].confidence;
  });

  std::vector<bool> gt_used(gts.size(), false);
  const double n_gt = static_cast<double>(gts.size());

  ApResult res;
  res.curve.reserve(dets.size());
  int tp = 0;
  std::vector<bool> is_tp(order.size(), false);
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const Detection& det = dets[order[rank]];
    int best_gt = -1;
    double best_iou = 0.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (gt_used[g] || gts[g].image != det.image) continue;
      const double v = iou(det.box, gts[g].box);
      if (v >= iou_thr && v > best_iou) {
        best_iou = v;
        best_gt = static_cast<int>(g);
      }
    }
    if (best_gt >= 0) {
      gt_used[best_gt] = true;
      is_tp[rank] = true;
      ++tp;
    }
    res.curve.push_back(PrPoint{
        n_gt > 0.0 ? static_cast<double>(tp) / n_gt : 0.0,
        static_cast<double>(tp) / static_cast<double>(rank + 1),
    });
  }
  res.tp = tp;
  res.fp = static_cast<int>(dets.size()) - tp;
  res.fn = static_cast<int>(gts.size()) - tp;

  if (res.curve.empty() || tp == 0) {
    res.ap = 0.0;
    return res;
  }

  if (interp == Interpolation::kAllPoint) {
    // Envelope precision from the right, integrated across recall steps.
    std::vector<double> pmax(res.curve.size());
    double running = 0.0;
    for (std::size_t i = res.curve.size(); i-- > 0;) {
      running = std::max(running, res.curve[i].precision);
      pmax[i] = running;
    }
    double ap = 0.0;
    double prev_recall = 0.0;
    for (std::size_t i = 0; i < res.curve.size(); ++i) {
      if (!is_tp[i]) continue;
      ap += (res.curve[i].recall - prev_recall) * pmax[i];
      prev_recall = res.curve[i].recall;
    }
    res.ap = ap;
  } else {
    double sum = 0.0;
    for (int step = 0; step <= 10; ++step) {
      const double r = step / 10.0;
      double best = 0.0;
      for (const auto& pt : res.curve) {
        if (pt.recall >= r - 1e-12) best = std::max(best, pt.precision);
      }
      sum += best;
    }
    res.ap = sum / 11.0;
  }
  return res;
}

double mean_ap(const std::map<std::string, double>& per_class_ap) {
  if (per_class_ap.empty()) throw std::invalid_argument("mean_ap: no classes");
  double sum = 0.0;
  for (const auto& [cls, ap] : per_class_ap) sum += ap;
  return sum / static_cast<double>(per_class_ap.size());
}

EvalReport evaluate(const std::vector<GroundTruthBox>& gts, const std::vector<Detection>& dets,
                    double iou_thr, Interpolation interp) {
  EvalReport report;
  report.iou_threshold = iou_thr;
  report.interp = interp;

  std::set<std::string> classes;
  std::set<std::string> gt_classes;
  for (const auto& g : gts) {
    classes.insert(g.cls);
    gt_classes.insert(g.cls);
  }
  for (const auto& d : dets) classes.insert(d.cls);

  if (classes.empty()) return report;

  std::map<std::string, double> ap_by_class;
  for (const auto& cls : classes) {
    std::vector<GroundTruthBox> cls_gts;
    std::vector<Detection> cls_dets;
    for (const auto& g : gts) {
      if (g.cls == cls) cls_gts.push_back(g);
    }
    for (const auto& d : dets) {
      if (d.cls == cls) cls_dets.push_back(d);
    }
    if (!gt_classes.count(cls)) {
      report.warnings.push_back("class '" + cls +
                                "' has detections but no ground truth; AP forced to 0");
    }
    const ApResult r = average_precision(cls_dets, cls_gts, iou_thr, interp);
    report.per_class[cls] = ClassEval{r.ap, r.tp, r.fp, r.fn};
    ap_by_class[cls] = r.ap;
  }
  report.map = mean_ap(ap_by_class);
  return report;
}

std::string eval_report_to_json(const EvalReport& report, bool pretty) {
  nlohmann::json classes = nlohmann::json::object();
  for (const auto& [cls, ev] : report.per_class) {
    classes[cls] = {{"ap", ev.ap}, {"tp", ev.tp}, {"fp", ev.fp}, {"fn", ev.fn}};
  }
  const nlohmann::json j = {
      {"map", report.map},
      {"iou_threshold", report.iou_threshold},
      {"interpolation", report.interp == Interpolation::kAllPoint ? "all" : "11pt"},
      {"classes", classes},
      {"warnings", report.warnings},
  };
  return pretty ? j.dump(2) : j.dump();
}

}  // namespace leafsev

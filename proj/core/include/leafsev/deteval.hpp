#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace leafsev {

// Inclusive-exclusive convention: area = (xmax - xmin) * (ymax - ymin).
struct Box {
  double xmin = 0.0;
  double ymin = 0.0;
  double xmax = 0.0;
  double ymax = 0.0;

  double area() const { return (xmax - xmin) * (ymax - ymin); }
};

double iou(const Box& a, const Box& b);

struct GroundTruthBox {
  std::string image;
  std::string cls;
  Box box;
};

struct Detection {
  std::string image;
  std::string cls;
  Box box;
  double confidence = 0.0;
};

struct ParsedAnnotation {
  std::string image;  // filename element
  std::vector<GroundTruthBox> boxes;
};

// Accepts the bounding-box XML emitted by common labeling tools:
// <annotation><filename/><object><name/><bndbox><xmin/>... Coordinates are
// integers; invalid boxes or missing coordinates raise ParseError.
ParsedAnnotation parse_voc_xml(std::string_view bytes);

// One JSON object per line: {"image":..,"class":..,"confidence":..,
// "box":[xmin,ymin,xmax,ymax]}.
std::vector<Detection> parse_detections_jsonl(std::string_view text);

enum class Interpolation { kAllPoint, kElevenPoint };

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};

struct ApResult {
  double ap = 0.0;
  std::vector<PrPoint> curve;  // one point per ranked detection
  int tp = 0;
  int fp = 0;
  int fn = 0;
};

// Single class. Detections are ranked by confidence (ties keep input order);
// each one greedily matches the unmatched ground truth of highest IoU >=
// iou_thr within its image.
ApResult average_precision(const std::vector<Detection>& dets,
                           const std::vector<GroundTruthBox>& gts, double iou_thr,
                           Interpolation interp = Interpolation::kAllPoint);

double mean_ap(const std::map<std::string, double>& per_class_ap);

struct ClassEval {
  double ap = 0.0;
  int tp = 0;
  int fp = 0;
  int fn = 0;
};

struct EvalReport {
  std::map<std::string, ClassEval> per_class;
  double map = 0.0;
  double iou_threshold = 0.5;
  Interpolation interp = Interpolation::kAllPoint;
  std::vector<std::string> warnings;  // e.g. detections for a class with no ground truth
};

EvalReport evaluate(const std::vector<GroundTruthBox>& gts, const std::vector<Detection>& dets,
                    double iou_thr = 0.5, Interpolation interp = Interpolation::kAllPoint);

std::string eval_report_to_json(const EvalReport& report, bool pretty = false);

}  // namespace leafsev

#ifndef ROADTUBES_ERRORS_HPP
#define ROADTUBES_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace roadtubes {

enum class ErrorKind {
  io,                 // file open/read/write failure
  malformed,          // document or line is not valid JSON / wrong shape
  unknown_version,    // schema version field not recognised
  missing_field,      // required field absent
  dangling_label,     // label id outside the vocabulary
  invalid_box,        // box fails x2>x1, y2>y1 or non-finite
  non_monotone_time,  // frame indices out of order
  length_mismatch,    // score vector length does not match the vocab
  score_range,        // score outside [0,1] beyond clamp tolerance
  bad_config,         // unusable configuration value
  bad_state,          // operation called out of sequence
  vocab_mismatch,     // ground truth and predictions disagree on vocab
};

class RoadError : public std::runtime_error {
 public:
  RoadError(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace roadtubes

#endif

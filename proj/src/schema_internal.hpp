#ifndef ROADTUBES_SCHEMA_INTERNAL_HPP
#define ROADTUBES_SCHEMA_INTERNAL_HPP

// Parsing pieces shared between schema.cpp and the pipeline layer.

#include "json_util.hpp"
#include "roadtubes/schema.hpp"

namespace roadtubes {

LabelVocab parse_vocab_object(const jsonutil::Json& v);

}  // namespace roadtubes

#endif

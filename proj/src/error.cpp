#include "dvp/error.hpp"

namespace dvp {

void throw_format(const std::string& what) { throw FormatError(what); }
void throw_shape(const std::string& what) { throw ShapeError(what); }
void throw_invalid(const std::string& what) { throw InvalidArgument(what); }

}  // namespace dvp

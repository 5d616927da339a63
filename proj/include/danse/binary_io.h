// include/danse/binary_io.h

// Copyright 2026   DANSE authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef DANSE_BINARY_IO_H_
#define DANSE_BINARY_IO_H_

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "danse/error.h"

// Little-endian primitives shared by the binary file formats.
namespace danse::binary {

template <typename U>
void WriteUnsigned(std::ostream& os, U value) {
  char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i)
    bytes[i] = static_cast<char>((value >> (8 * i)) & 0xff);
  os.write(bytes, sizeof(U));
}

template <typename U>
U ReadUnsigned(std::istream& is, const std::string& what) {
  unsigned char bytes[sizeof(U)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(U)))
    throw FormatError("unexpected end of file reading " + what);
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i)
    value |= static_cast<U>(bytes[i]) << (8 * i);
  return value;
}

inline void WriteF32(std::ostream& os, float v) {
  WriteUnsigned(os, std::bit_cast<std::uint32_t>(v));
}
inline void WriteF64(std::ostream& os, double v) {
  WriteUnsigned(os, std::bit_cast<std::uint64_t>(v));
}
inline float ReadF32(std::istream& is, const std::string& what) {
  return std::bit_cast<float>(ReadUnsigned<std::uint32_t>(is, what));
}
inline double ReadF64(std::istream& is, const std::string& what) {
  return std::bit_cast<double>(ReadUnsigned<std::uint64_t>(is, what));
}

inline void ExpectMagic(std::istream& is, const char (&magic)[5],
                        const std::string& path) {
  char buf[4];
  if (!is.read(buf, 4) || std::string(buf, 4) != std::string(magic, 4))
    throw FormatError(path + ": bad magic, expected \"" + magic + "\"");
}

}  // namespace danse::binary

#endif  // DANSE_BINARY_IO_H_

// include/voiceprobe/npy.hpp

// Copyright 2026  The voiceprobe Authors
//
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

#pragma once

#include <string>

#include "voiceprobe/common.hpp"

namespace voiceprobe {

/// Reads a little-endian float32/float64 C-order array (versions 1.x-3.x of
/// the .npy layout). 1-D arrays come back as a single row; 0-D arrays are
/// rejected. Non-finite values raise DataError naming the file.
Matrix read_npy(const std::string& path);

/// Same as read_npy but from an in-memory buffer; `source` names it in errors.
Matrix parse_npy(const std::string& bytes, const std::string& source);

/// Writes a 2-D float64 array (version 1.0). With `as_vector` and a single
/// row, writes a 1-D array instead.
void write_npy(const std::string& path, const Matrix& m, bool as_vector = false);
std::string encode_npy(const Matrix& m, bool as_vector = false);

}  // namespace voiceprobe

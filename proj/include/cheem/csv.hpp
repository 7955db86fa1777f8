/*
 * Copyright 2026 The Cheem Explorer Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef CHEEM_CSV_HPP_
#define CHEEM_CSV_HPP_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cheem::csv {

using Record = std::vector<std::string>;

// RFC-4180 records: comma separated, double-quoted fields may contain commas,
// line breaks and "" escapes. Accepts CRLF or LF, a trailing newline, and a
// leading UTF-8 byte order mark. Throws ValidationError on malformed quoting.
std::vector<Record> parse(std::string_view text);

// Quotes a field only when needed.
std::string escape(std::string_view field);

// Decimal-point number with optional surrounding spaces. Returns nullopt for
// anything else, including empty text and non-finite values.
std::optional<double> parse_number(std::string_view text);

}  // namespace cheem::csv

#endif  // CHEEM_CSV_HPP_

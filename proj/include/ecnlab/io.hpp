#pragma once

#include <filesystem>
#include <string>

#include "ecnlab/core.hpp"

// External file formats.
//
// TagSet file: one label name per line; the first line may be
// `#background=<index>` (default: index of the label named O or background).
//
// Sequence format: CoNLL-style TSV, one `token<TAB>label` per line, optional
// further `feature=value` columns, blank line between sentences. UTF-8.
//
// Grid format: plain text, header `ECNGRID v1 H W C K`, then H*W lines of
// `r g b label` in row-major order. C is the channel count (always 3),
// K the tagset size.

namespace ecnlab {

TagSet load_tagset(const std::filesystem::path& path);
void save_tagset(const TagSet& ts, const std::filesystem::path& path);

Dataset load_conll(const std::filesystem::path& path, const TagSet& tagset,
                   DatasetRole role = DatasetRole::corrupted);
void save_conll(const Dataset& ds, const std::filesystem::path& path);

Dataset load_grid(const std::filesystem::path& path, const TagSet& tagset,
                  DatasetRole role = DatasetRole::corrupted);
void save_grid(const Dataset& ds, const std::filesystem::path& path);

// Dispatch on Dataset.kind; grid datasets use `.grid` files, sequences `.conll`.
Dataset load_dataset(const std::filesystem::path& path, const TagSet& tagset,
                     DataKind kind, DatasetRole role);
void save_dataset(const Dataset& ds, const std::filesystem::path& path);

}  // namespace ecnlab

#ifndef TACPLUS_CODEC_HPP
#define TACPLUS_CODEC_HPP

#include "tacplus/codec/bitstream.hpp"
#include "tacplus/codec/block_codec.hpp"
#include "tacplus/codec/deflate.hpp"
#include "tacplus/codec/huffman.hpp"
#include "tacplus/codec/lorenzo.hpp"

#endif  // TACPLUS_CODEC_HPP

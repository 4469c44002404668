// Design-specific types for parser "linear_chain".
#ifndef MPO_PARSER_TYPES_HPP
#define MPO_PARSER_TYPES_HPP

#include "module.hpp"

constexpr unsigned BUS_SIZE = 64;
typedef PktData<BUS_SIZE> PktDataType;

constexpr headerIDType HDR_A = 1;
constexpr headerIDType HDR_B = 2;
constexpr headerIDType HDR_C = 3;

// ---- a: fixed length, level 0
struct APHVDataType {
	bool Valid;
	ap_uint<32> tag;
	ap_uint<8> sel;

	void Extract(const ap_uint<BUS_SIZE>& Data, unsigned beat) {
		if (beat == 0) {
			tag = Data.range(63, 32);
			sel = Data.range(23, 16);
		}
	}
};

typedef HeaderLayout<ap_uint<8>, 1, 1, fixedHeaderFormat<6, 48>> ALayoutType;
const ALayoutType a_layout = {
	{{{0x01, 0xff, HDR_B}}},
	{40, 8},
	{{48}},
	{{48}},
	{}
};

// ---- b: fixed length, level 1
struct BPHVDataType {
	bool Valid;
	ap_uint<48> id;
	ap_uint<16> flags;
	ap_uint<16> proto;
	ap_uint<16> tail;

	void Extract(const ap_uint<BUS_SIZE>& Data, unsigned beat) {
		if (beat == 0) {
			id = Data.range(63, 16);
			flags = Data.range(15, 0);
		}
		if (beat == 1) {
			proto = Data.range(63, 48);
			tail = Data.range(47, 32);
		}
	}
};

typedef HeaderLayout<ap_uint<16>, 1, 1, fixedHeaderFormat<7, 96>> BLayoutType;
const BLayoutType b_layout = {
	{{{0x00c0, 0x00f0, HDR_C}}},
	{64, 16},
	{{96}},
	{{32}},
	{}
};

// ---- c: fixed length, level 2
struct CPHVDataType {
	bool Valid;
	ap_uint<24> x;

	void Extract(const ap_uint<BUS_SIZE>& Data, unsigned beat) {
		if (beat == 0) {
			x = Data.range(63, 40);
		}
	}
};

typedef HeaderLayout<ap_uint<1>, 0, 1, fixedHeaderFormat<5, 24>> CLayoutType;
const CLayoutType c_layout = {
	{{}},
	{0, 0},
	{{24}},
	{{24}},
	{}
};

#endif  // MPO_PARSER_TYPES_HPP

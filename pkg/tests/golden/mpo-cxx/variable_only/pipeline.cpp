// Top-level parser "variable_only": 2 levels, 0 muxes, 2 pipe-register banks.
#include "types.hpp"

static VariableHeader<100, BUS_SIZE, OuterLayoutType, OuterPHVDataType> outer(HDR_OUTER, outer_layout);
static VariableHeader<60, BUS_SIZE, InnerLayoutType, InnerPHVDataType> inner(HDR_INNER, inner_layout);

static PktDataType pipeReg0;
static PktDataType pipeReg1;

// PktIn.NextHeader must carry HDR_OUTER on the first beat of every packet.
void Parser(const PktDataType& PktIn, OuterPHVDataType& outer_PHV, InnerPHVDataType& inner_PHV, PktDataType& PktOut) {
	PktDataType tmpPOut[2];

	// deepest bank first, so every bank hands on last cycle's word
	PktOut = pipeReg1;

	// level 1
	inner.HeaderAnalysis(pipeReg0, inner_PHV, tmpPOut[1]);
	pipeReg1 = tmpPOut[1];

	// level 0
	outer.HeaderAnalysis(PktIn, outer_PHV, tmpPOut[0]);
	pipeReg0 = tmpPOut[0];
}

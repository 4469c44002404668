// Generic parser-node module.  Every node of every generated parser is an
// instance of FixedHeader or VariableHeader below; nothing in this file is
// design specific.  Synthesis pragmas are intentionally absent: add
// INLINE / PIPELINE / ARRAY_PARTITION directives to match your tool.
#ifndef MPO_PARSER_MODULE_HPP
#define MPO_PARSER_MODULE_HPP

#include <array>
#include <type_traits>
#include <utility>

#include <ap_int.h>

using std::array;

typedef unsigned headerIDType;
constexpr headerIDType HDR_ACCEPT = 0;

// ---------------------------------------------------------------- helpers
constexpr unsigned numbits(unsigned long long n) {
	return n < 2 ? 1 : 1 + numbits(n >> 1);
}

constexpr unsigned long long B2b(unsigned long long n_bytes) {
	return n_bytes * 8;
}

constexpr unsigned long long createMask(unsigned width) {
	return width >= 64 ? ~0ULL : (1ULL << width) - 1;
}

// right shift bringing a key that ends at key_end (MSB-first, exclusive)
// to the least-significant bits of the bus word holding it
constexpr unsigned shift_def(unsigned header_bits, unsigned bus_bits, unsigned key_end) {
	return (key_end % bus_bits) == 0 ? 0 : bus_bits - (key_end % bus_bits);
}

// ------------------------------------------------------------ bus words
template<unsigned N_BusSize>
struct PktData {
	ap_uint<N_BusSize> Data;
	bool Start;
	bool Finish;
	headerIDType NextHeader;
	unsigned BitsLeft;
};

// ----------------------------------------------------------- header layout
template<typename T_Key>
struct KeyEntry {
	T_Key KeyVal;
	T_Key KeyMask;
	headerIDType NextHeader;
};

template<unsigned HSIZE_BITS, class T_DHeaderFormat>
struct HeaderFormat {
	ap_uint<HSIZE_BITS> getHeaderSize(const ap_uint<HSIZE_BITS>& expr_val) const {
		return static_cast<const T_DHeaderFormat*>(this)->getSpecHeaderSize(expr_val);
	}
	bool inRange(const ap_uint<HSIZE_BITS>& expr_val) const {
		return static_cast<const T_DHeaderFormat*>(this)->specInRange(expr_val);
	}
};

template<unsigned HSIZE_BITS, unsigned N_SizeBits>
struct fixedHeaderFormat
	: public HeaderFormat<HSIZE_BITS, fixedHeaderFormat<HSIZE_BITS, N_SizeBits>> {
	static constexpr unsigned FieldOffset = 0;
	static constexpr unsigned FieldWidth = 1;
	ap_uint<HSIZE_BITS> getSpecHeaderSize(const ap_uint<HSIZE_BITS>&) const {
		return N_SizeBits;
	}
	bool specInRange(const ap_uint<HSIZE_BITS>&) const { return true; }
};

// length = N_Mult * field + N_Add bits, field in [N_Min, N_Max]
template<unsigned HSIZE_BITS, unsigned N_FieldOffset, unsigned N_FieldWidth,
         unsigned N_Mult, unsigned N_Add, unsigned N_Min, unsigned N_Max>
struct varHeaderFormat
	: public HeaderFormat<HSIZE_BITS, varHeaderFormat<HSIZE_BITS, N_FieldOffset,
	                      N_FieldWidth, N_Mult, N_Add, N_Min, N_Max>> {
	static constexpr unsigned FieldOffset = N_FieldOffset;
	static constexpr unsigned FieldWidth = N_FieldWidth;
	ap_uint<HSIZE_BITS> getSpecHeaderSize(const ap_uint<HSIZE_BITS>& expr_val) const {
		return N_Mult * expr_val + N_Add;
	}
	bool specInRange(const ap_uint<HSIZE_BITS>& expr_val) const {
		return expr_val >= N_Min && expr_val <= N_Max;
	}
};

template<typename T_Key, unsigned N_Keys, unsigned N_Lengths, class T_Format>
struct HeaderLayout {
	array<KeyEntry<T_Key>, N_Keys> Key;
	std::pair<unsigned, unsigned> KeyLocation;  // first: key offset, second: key size in bits
	array<unsigned, N_Lengths> ArrLenLookup;     // every valid header length, in bits
	array<unsigned, N_Lengths> ArrShiftLookup;   // realignment shift for each length
	T_Format Format;
};

// ------------------------------------------------------------ base module
template<unsigned N_Size, unsigned N_BusSize, class T_HeaderLayout, class T_PHV, class T_DHeader>
class Header {
	protected:
		typedef ap_uint<numbits(B2b(N_Size))> RXBitsType;
		typedef PktData<N_BusSize> PktDataType;
		typedef typename std::remove_reference<decltype(T_HeaderLayout::Key[0].KeyVal)>::type KeyType;
		static constexpr unsigned ARR_SIZE =
			std::tuple_size<decltype(T_HeaderLayout::ArrLenLookup)>::value;
		static constexpr unsigned RX_MAX = (1u << numbits(B2b(N_Size))) - 1;

		const headerIDType instanceID;
		const T_HeaderLayout HeaderLayout;
		const unsigned stateTransShiftVal;
		const array<bool, ARR_SIZE> HeaderBusCompVal;
		RXBitsType rxBits;
		unsigned beat;
		bool active;
		bool failed;
		headerIDType NextHeader;
		bool NextHeaderValid;
		unsigned headerBits;
		PktDataType held;

	public:
		template<typename T, typename F>
		const T init_array(const F& func) const {
			typename std::remove_cv<T>::type arr {};
			for (unsigned i = 0; i < arr.size(); ++i)
				arr[i] = func(i);
			return arr;
		}

		Header(const headerIDType instance_id, const T_HeaderLayout& HLayout) :
			instanceID(instance_id),
			HeaderLayout(HLayout),
			stateTransShiftVal{shift_def(B2b(N_Size), N_BusSize,
				(HLayout.KeyLocation.first + HLayout.KeyLocation.second))
			},
			HeaderBusCompVal(
				init_array<decltype(HeaderBusCompVal)>(
					[HLayout](unsigned i) {
						return HLayout.ArrLenLookup[i] > N_BusSize;
					}
				)
			),
			rxBits(0), beat(0), active(false), failed(false),
			NextHeader(HDR_ACCEPT), NextHeaderValid(false), headerBits(0), held()
		{ }

		void StateTransition(const PktDataType& PktIn) {
			const KeyType DataInMask = createMask(HeaderLayout.KeyLocation.second);
			KeyType packetKeyVal = (PktIn.Data >> stateTransShiftVal) & DataInMask;
			if (N_KeyCount() == 0) {
				NextHeaderValid = true;
				return;
			}
			if (!NextHeaderValid && (rxBits > HeaderLayout.KeyLocation.first)
					&& beat == HeaderLayout.KeyLocation.first / N_BusSize)
				for (auto key : HeaderLayout.Key)
					if (key.KeyVal == (packetKeyVal & key.KeyMask)) {
						NextHeader = key.NextHeader;
						NextHeaderValid = true;
					}
		}

		void HeaderAnalysis(const PktDataType& PktIn, T_PHV& PHV, PktDataType& PktOut) {
			if (PktIn.Start) {
				rxBits = 0;
				beat = 0;
				failed = false;
				NextHeaderValid = false;
				NextHeader = HDR_ACCEPT;
				headerBits = 0;
				PHV.Valid = false;
				active = (PktIn.NextHeader == instanceID);
			}
			if (!active || failed) {
				PktOut = PktIn;
				return;
			}
			rxBits = (rxBits + N_BusSize > RX_MAX) ? RXBitsType(RX_MAX) : RXBitsType(rxBits + N_BusSize);
			PHV.Extract(PktIn.Data, beat);
			StateTransition(PktIn);
			static_cast<T_DHeader*>(this)->PipelineAdjust(PktIn, PHV, PktOut);
			held = PktIn;
			++beat;
		}

	protected:
		static constexpr unsigned N_KeyCount() {
			return std::tuple_size<decltype(T_HeaderLayout::Key)>::value;
		}

		// shared tail of PipelineAdjust once the header length is known
		void Realign(const PktDataType& PktIn, T_PHV& PHV, PktDataType& PktOut, unsigned shift) {
			const unsigned skip = headerBits / N_BusSize;
			if (beat == skip) {
				PHV.Valid = PktIn.BitsLeft >= headerBits;
				failed = !PHV.Valid;
			}
			PktOut = PktIn;
			if (failed)
				return;
			PktOut.Start = (beat == skip + 1);
			PktOut.NextHeader = NextHeaderValid ? NextHeader : HDR_ACCEPT;
			PktOut.BitsLeft = PktIn.BitsLeft - headerBits;
			if (shift == 0)
				PktOut.Data = PktIn.Data;
			else
				PktOut.Data = (held.Data << shift) | (PktIn.Data >> (N_BusSize - shift));
		}
};

// --------------------------------------------------------- fixed-size node
template<unsigned N_Size, unsigned N_BusSize, class T_HeaderLayout, class T_PHV>
class FixedHeader : public Header<N_Size, N_BusSize, T_HeaderLayout, T_PHV,
                                  FixedHeader<N_Size, N_BusSize, T_HeaderLayout, T_PHV>> {
	typedef Header<N_Size, N_BusSize, T_HeaderLayout, T_PHV,
	               FixedHeader<N_Size, N_BusSize, T_HeaderLayout, T_PHV>> Base;
	public:
		FixedHeader(const headerIDType instance_id, const T_HeaderLayout& HLayout)
			: Base(instance_id, HLayout) { }

		void PipelineAdjust(const typename Base::PktDataType& PktIn, T_PHV& PHV,
		                    typename Base::PktDataType& PktOut) {
			this->headerBits = B2b(N_Size);
			// single constant shift: wiring only, no shifter
			this->Realign(PktIn, PHV, PktOut, this->HeaderLayout.ArrShiftLookup[0]);
		}
};

// ------------------------------------------------------ variable-size node
template<unsigned N_Size, unsigned N_BusSize, class T_HeaderLayout, class T_PHV>
class VariableHeader : public Header<N_Size, N_BusSize, T_HeaderLayout, T_PHV,
                                     VariableHeader<N_Size, N_BusSize, T_HeaderLayout, T_PHV>> {
	typedef Header<N_Size, N_BusSize, T_HeaderLayout, T_PHV,
	               VariableHeader<N_Size, N_BusSize, T_HeaderLayout, T_PHV>> Base;
	typedef decltype(T_HeaderLayout::Format) FormatType;
	static constexpr unsigned LEN_OFF = FormatType::FieldOffset;
	static constexpr unsigned LEN_W = FormatType::FieldWidth;
	static constexpr unsigned LEN_BEAT = (LEN_OFF + LEN_W - 1) / N_BusSize;
	static constexpr unsigned LEN_HI = N_BusSize - 1 - (LEN_OFF - LEN_BEAT * N_BusSize);
	public:
		VariableHeader(const headerIDType instance_id, const T_HeaderLayout& HLayout)
			: Base(instance_id, HLayout) { }

		void PipelineAdjust(const typename Base::PktDataType& PktIn, T_PHV& PHV,
		                    typename Base::PktDataType& PktOut) {
			if (this->beat == LEN_BEAT) {
				const ap_uint<LEN_W> len_field = PktIn.Data.range(LEN_HI, LEN_HI + 1 - LEN_W);
				if (!this->HeaderLayout.Format.inRange(len_field)) {
					this->failed = true;
					PktOut = PktIn;
					return;
				}
				this->headerBits = this->HeaderLayout.Format.getHeaderSize(len_field);
			}
			// only the planned shifts exist: a small mux instead of a barrel shifter
			unsigned shift = 0;
			for (unsigned i = 0; i < Base::ARR_SIZE; ++i)
				if (this->HeaderLayout.ArrLenLookup[i] == this->headerBits)
					shift = this->HeaderLayout.ArrShiftLookup[i];
			this->Realign(PktIn, PHV, PktOut, shift);
		}
};

#endif  // MPO_PARSER_MODULE_HPP

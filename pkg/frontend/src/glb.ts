// Minimal GLB (glTF 2.0 binary) reader for POINTS-mode clouds: enough to
// feed positions and colors straight into GPU buffers.

const GLB_MAGIC = 0x46546c67;
const CHUNK_JSON = 0x4e4f534a;
const CHUNK_BIN = 0x004e4942;

export interface PointCloudData {
  positions: Float32Array; // xyz triplets
  colors: Uint8Array; // rgb triplets
  count: number;
  sourceActionId: string;
}

interface GltfDoc {
  meshes?: {
    primitives?: { attributes?: Record<string, number>; mode?: number }[];
    extras?: { sourceActionId?: string };
  }[];
  accessors?: { bufferView: number; byteOffset?: number; componentType: number; count: number; type: string }[];
  bufferViews?: { byteOffset?: number; byteLength: number }[];
}

export function parseGlbPointCloud(buffer: ArrayBuffer): PointCloudData {
  const view = new DataView(buffer);
  if (buffer.byteLength < 12 || view.getUint32(0, true) !== GLB_MAGIC) {
    throw new Error("not a GLB container");
  }
  if (view.getUint32(4, true) !== 2) {
    throw new Error("unsupported GLB version");
  }
  if (view.getUint32(8, true) !== buffer.byteLength) {
    throw new Error("GLB length field does not match file size");
  }

  let offset = 12;
  let json: GltfDoc | null = null;
  let bin: Uint8Array = new Uint8Array(0);
  while (offset + 8 <= buffer.byteLength) {
    const length = view.getUint32(offset, true);
    const type = view.getUint32(offset + 4, true);
    const payload = new Uint8Array(buffer, offset + 8, length);
    if (type === CHUNK_JSON) {
      json = JSON.parse(new TextDecoder().decode(payload)) as GltfDoc;
    } else if (type === CHUNK_BIN) {
      bin = payload;
    }
    offset += 8 + length;
  }
  if (!json) throw new Error("GLB has no JSON chunk");

  const prim = json.meshes?.[0]?.primitives?.[0];
  if (!prim || (prim.mode ?? 4) !== 0) {
    throw new Error("GLB mesh is not a POINTS primitive");
  }
  const readAccessor = (index: number): { start: number; count: number; componentType: number } => {
    const acc = json!.accessors![index];
    const bv = json!.bufferViews![acc.bufferView];
    return {
      start: (bv.byteOffset ?? 0) + (acc.byteOffset ?? 0),
      count: acc.count,
      componentType: acc.componentType,
    };
  };

  const posIndex = prim.attributes?.POSITION;
  if (posIndex === undefined) throw new Error("GLB primitive lacks POSITION");
  const pos = readAccessor(posIndex);
  if (pos.componentType !== 5126) throw new Error("POSITION must be float32");
  const positions = new Float32Array(pos.count * 3);
  positions.set(
    new Float32Array(bin.buffer, bin.byteOffset + pos.start, pos.count * 3),
  );

  let colors = new Uint8Array(pos.count * 3);
  colors.fill(200);
  const colIndex = prim.attributes?.COLOR_0;
  if (colIndex !== undefined) {
    const col = readAccessor(colIndex);
    if (col.componentType === 5121) {
      colors = new Uint8Array(col.count * 3);
      colors.set(new Uint8Array(bin.buffer, bin.byteOffset + col.start, col.count * 3));
    }
  }
  return {
    positions,
    colors,
    count: pos.count,
    sourceActionId: json.meshes?.[0]?.extras?.sourceActionId ?? "",
  };
}
